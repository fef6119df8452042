"""Measurement post-processing: dB arithmetic, noise-floor and loss corrections."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import CorrectionError, ParameterError

# Below this separation from the electronic floor the subtraction is too
# ill-conditioned to trust (0.5 dB ~ signal is 11% of the raw power).
MIN_FLOOR_MARGIN_DB = 0.5
FLAT_TRACE_TOL = 1e-12

# Headline setup efficiency: one minus the quoted 20.5 % total loss.
PAPER_TOTAL_ETA = 0.795
PAPER_COMPONENT_LOSSES = (0.04, 0.078, 0.10)


def db_to_linear(x: float) -> float:
    return 10.0 ** (x / 10.0)


def linear_to_db(r: float) -> float:
    if not r > 0:
        raise ParameterError(f"cannot take dB of non-positive ratio {r}")
    return 10.0 * math.log10(r)


def add_powers_dbm(*levels_dbm: float) -> float:
    """Incoherent sum of noise powers given in dBm."""
    return 10.0 * math.log10(sum(10.0 ** (x / 10.0) for x in levels_dbm))


def electronic_noise_correct(measured_dbm: float, electronic_dbm: float,
                             min_margin_db: float = MIN_FLOOR_MARGIN_DB) -> float:
    """Remove an additive electronic noise floor in linear power.

    Pass ``electronic_dbm = -inf`` when there is no floor to subtract.
    """
    if electronic_dbm == -math.inf:
        return float(measured_dbm)
    if measured_dbm - electronic_dbm < min_margin_db:
        raise CorrectionError(
            f"measured {measured_dbm} dBm is within {min_margin_db} dB of the "
            f"{electronic_dbm} dBm electronic floor; correction is meaningless")
    return 10.0 * math.log10(10.0 ** (measured_dbm / 10.0) - 10.0 ** (electronic_dbm / 10.0))


def _check_eta(eta: float) -> float:
    eta = float(eta)
    if not (math.isfinite(eta) and 0.0 < eta <= 1.0):
        raise ParameterError(f"efficiency must lie in (0, 1], got {eta}")
    return eta


def loss_apply(source_rel: float, eta: float) -> float:
    """Variance after a loss channel: eta*v + (1 - eta)."""
    eta = _check_eta(eta)
    return eta * source_rel + (1.0 - eta)


def loss_correct(measured_rel: float, eta: float) -> float:
    """Invert ``loss_apply``: the variance before detection losses."""
    eta = _check_eta(eta)
    floor = 1.0 - eta
    if measured_rel <= floor:
        raise CorrectionError(
            f"measured variance {measured_rel:.6g} is at or below the loss floor "
            f"{floor:.6g} ({linear_to_db(floor) if floor > 0 else -math.inf:.3f} dB) "
            f"for eta = {eta}")
    return (measured_rel - floor) / eta


def loss_floor_db(eta: float) -> float:
    eta = _check_eta(eta)
    return -math.inf if eta == 1.0 else linear_to_db(1.0 - eta)


def total_efficiency(losses: Iterable[float]) -> float:
    eta = 1.0
    for loss in losses:
        loss = float(loss)
        if not (math.isfinite(loss) and 0.0 <= loss < 1.0):
            raise ParameterError(f"loss fraction must lie in [0, 1), got {loss}")
        eta *= 1.0 - loss
    return eta


@dataclass
class CorrectionReport:
    measured_db: float
    eta: float
    inferred_source_db: float
    electronic_noise_dbm: float | None = None
    notes: list[str] = field(default_factory=list)

    def to_text(self) -> str:
        """Plain ``key: value`` report, one field per line."""
        lines = [
            f"measured_db: {self.measured_db:.6f}",
            f"eta: {self.eta:.6f}",
            f"inferred_source_db: {self.inferred_source_db:.6f}",
            "electronic_noise_dbm: "
            + ("none" if self.electronic_noise_dbm is None else f"{self.electronic_noise_dbm:.6f}"),
        ]
        lines += [f"note: {n}" for n in self.notes]
        return "\n".join(lines) + "\n"


def correction_report(measured_db: float, eta: float,
                      electronic_noise_dbm: float | None = None,
                      notes: Sequence[str] = ()) -> CorrectionReport:
    source = loss_correct(db_to_linear(measured_db), eta)
    return CorrectionReport(measured_db, eta, linear_to_db(source),
                            electronic_noise_dbm, list(notes))


class TraceMinimum(NamedTuple):
    theta: float
    v_min_db: float
    degenerate: bool


def find_minimum(theta: Sequence[float], variance_linear: Sequence[float]) -> TraceMinimum:
    """Arg-min of a sampled noise curve with 3-point parabolic refinement.

    ``theta`` must be strictly increasing and uniformly spaced. Ties resolve
    to the smallest angle; a flat curve is flagged degenerate with
    ``theta = 0``.
    """
    th = np.asarray(theta, dtype=float)
    v = np.asarray(variance_linear, dtype=float)
    if th.shape != v.shape or th.ndim != 1:
        raise ParameterError("theta and variance must be 1-D arrays of equal length")
    if len(th) < 5:
        raise ParameterError("need at least 5 trace points")
    if np.any(np.diff(th) <= 0):
        raise ParameterError("trace abscissa must be strictly increasing")
    if v.max() - v.min() < FLAT_TRACE_TOL:
        return TraceMinimum(0.0, linear_to_db(float(v.mean())), True)
    i = int(np.argmin(v))
    if i == 0 or i == len(v) - 1:
        return TraceMinimum(float(th[i]), linear_to_db(float(v[i])), False)
    h = 0.5 * (th[i + 1] - th[i - 1])
    y0, y1, y2 = v[i - 1], v[i], v[i + 1]
    curv = y0 - 2.0 * y1 + y2
    if curv <= 0:
        return TraceMinimum(float(th[i]), linear_to_db(float(y1)), False)
    shift = 0.5 * (y0 - y2) / curv
    v_star = y1 - 0.25 * (y0 - y2) * shift
    return TraceMinimum(float(th[i] + shift * h), linear_to_db(float(v_star)), False)


def extract_minimum(trace) -> TraceMinimum:
    """Squeezing angle and depth from a rotation ``NoiseTrace``.

    Uses the electronic-noise-corrected column, as a measurement would.
    """
    theta = trace.thetas()
    v = [db_to_linear(p.corrected_db) for p in trace.points]
    return find_minimum(theta, v)
