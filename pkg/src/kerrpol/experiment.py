"""Forward model of the fiber polarization-squeezing bench.

Pipeline: coherent pulses on both fiber axes -> Kerr shear with
``gamma = kerr_coefficient * pulse_energy`` plus excess phase noise
``thermal_noise_coeff * pulse_energy ** thermal_exponent`` -> pi/2
relative-phase lock -> fiber-end, optics and detector losses -> rotating
half-wave plate and PBS, whose difference current measures ``S_{4 Phi}``
-> spectrum-analyzer power with an electronic noise floor.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields, replace
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.optimize import brentq

from . import analysis, gaussian, stokes
from .errors import ConfigError, InfeasibleTargetError, ParameterError
from .stokes import PolarizationState

# Spectrum-analyzer settings of the reference measurement; metadata only,
# noise is treated as white at the analysis frequency.
ANALYSIS_FREQUENCY_MHZ = 17.5
RESOLUTION_BANDWIDTH_KHZ = 300.0
VIDEO_BANDWIDTH_HZ = 30.0

# Kerr coefficient that puts the post-loss minimum at -5.1 dB for an
# 83.7 pJ pulse with the default losses and no excess phase noise; this is
# calibrate_kerr(BenchConfig(), -5.1, 83.7) rounded to 12 digits.
DEFAULT_KERR_COEFFICIENT = 0.0142289399756

THREADS_ENV = "KERRPOL_THREADS"


@dataclass(frozen=True)
class BenchConfig:
    pulse_energy: float | None = None            # pJ
    kerr_coefficient: float = DEFAULT_KERR_COEFFICIENT  # gamma per pJ
    thermal_noise_coeff: float = 0.0             # shot-noise units per pJ**p
    thermal_exponent: float = 3.0
    fiber_end_loss: float = 0.04
    optics_loss: float = 0.078                   # includes the 0.1 % lock tap
    detector_loss: float = 0.10
    electronic_noise_dbm: float = -86.1
    shot_noise_dbm: float = -57.0                # arbitrary synthesis anchor, not physical
    mean_photon_number: float = 1.0e8            # photons per analysis window (alpha^2)
    soliton_energy_pj: float = 56.0              # annotation only

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None and f.name == "pulse_energy":
                continue
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ConfigError(f"{f.name} must be a number, got {v!r}")
            if f.name == "electronic_noise_dbm" and v == -math.inf:
                continue
            if not math.isfinite(v):
                raise ConfigError(f"{f.name} must be finite, got {v}")
        for name in ("fiber_end_loss", "optics_loss", "detector_loss"):
            v = getattr(self, name)
            if not 0.0 <= v < 1.0:
                raise ConfigError(f"{name} must lie in [0, 1), got {v}")
        if self.pulse_energy is not None and self.pulse_energy < 0:
            raise ConfigError(f"pulse_energy must be >= 0, got {self.pulse_energy}")
        if self.kerr_coefficient < 0:
            raise ConfigError("kerr_coefficient must be >= 0")
        if self.thermal_noise_coeff < 0:
            raise ConfigError("thermal_noise_coeff must be >= 0")
        if self.mean_photon_number <= 0:
            raise ConfigError("mean_photon_number must be > 0")

    @property
    def losses(self) -> tuple[float, float, float]:
        return (self.fiber_end_loss, self.optics_loss, self.detector_loss)

    @property
    def efficiency(self) -> float:
        return analysis.total_efficiency(self.losses)

    def with_energy(self, pulse_energy: float) -> "BenchConfig":
        return replace(self, pulse_energy=float(pulse_energy))

    def energy(self) -> float:
        if self.pulse_energy is None:
            raise ConfigError("pulse_energy is not set (give it in the config or as a flag)")
        return self.pulse_energy

    def gamma(self) -> float:
        return self.kerr_coefficient * self.energy()

    def thermal_variance(self) -> float:
        e = self.energy()
        if self.thermal_noise_coeff == 0.0:
            return 0.0
        return self.thermal_noise_coeff * e ** self.thermal_exponent

    def as_dict(self) -> dict:
        return asdict(self)


def mode_block(gamma: float, thermal: float = 0.0) -> np.ndarray:
    """Single-mode covariance after Kerr shear and excess phase noise."""
    state = gaussian.apply_transform(gaussian.vacuum(1), gaussian.kerr_shear(gamma))
    state = gaussian.add_classical_noise(state, np.diag([0.0, thermal]), [0])
    return state.block(0)


def build_source(cfg: BenchConfig) -> PolarizationState:
    """Circularly polarized fiber output: two independent, identical Kerr modes."""
    return stokes.circular_state(cfg.mean_photon_number,
                                 mode_block(cfg.gamma(), cfg.thermal_variance()))


def apply_bench_losses(p: PolarizationState, cfg: BenchConfig) -> PolarizationState:
    g = p.gauss
    for loss in cfg.losses:
        for mode in (0, 1):
            g = gaussian.loss_channel(g, 1.0 - loss, mode)
    return PolarizationState.from_gaussian(g)


def detected_state(cfg: BenchConfig) -> PolarizationState:
    return apply_bench_losses(build_source(cfg), cfg)


class StokesMeasurement(NamedTuple):
    theta: float          # radians, 4 * waveplate angle
    variance_linear: float
    variance_db: float
    raw_dbm: float
    corrected_db: float


def synthesize_raw_dbm(variance_db: float, cfg: BenchConfig) -> float:
    """Spectrum-analyzer reading: signal on top of the electronic floor."""
    signal = cfg.shot_noise_dbm + variance_db
    if cfg.electronic_noise_dbm == -math.inf:
        return signal
    return analysis.add_powers_dbm(signal, cfg.electronic_noise_dbm)


def measure_stokes(p: PolarizationState, waveplate_angle_deg: float,
                   cfg: BenchConfig) -> StokesMeasurement:
    theta = math.radians(4.0 * waveplate_angle_deg)
    ref = stokes.shot_noise_reference(p)
    v = stokes.stokes_theta_variance(p, theta) / ref
    v_db = analysis.linear_to_db(v)
    raw = synthesize_raw_dbm(v_db, cfg)
    corrected = analysis.electronic_noise_correct(raw, cfg.electronic_noise_dbm) - cfg.shot_noise_dbm
    return StokesMeasurement(theta, v, v_db, raw, corrected)


class TracePoint(NamedTuple):
    abscissa: float
    variance_linear: float
    variance_db: float
    raw_dbm: float
    corrected_db: float


@dataclass(frozen=True)
class NoiseTrace:
    """Rotation sweep: abscissa is the waveplate angle in degrees."""

    sweep_kind: str
    points: tuple[TracePoint, ...]
    metadata: dict

    def __post_init__(self):
        xs = [p.abscissa for p in self.points]
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ParameterError("trace abscissas must be strictly increasing")

    def thetas(self) -> np.ndarray:
        """Phase-space projection angles in radians (theta = 4 Phi)."""
        if self.sweep_kind != "rotation":
            raise ParameterError("projection angles exist only for rotation sweeps")
        return np.radians(4.0 * np.array([p.abscissa for p in self.points]))


def sweep_threads() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw == "":
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"{THREADS_ENV} must be >= 1, got {n}")
    return n


def _parallel_map(fn: Callable, items: Sequence) -> list:
    n = sweep_threads()
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def _metadata(cfg: BenchConfig) -> dict:
    return {
        "config": cfg.as_dict(),
        "analysis_frequency_mhz": ANALYSIS_FREQUENCY_MHZ,
        "rbw_khz": RESOLUTION_BANDWIDTH_KHZ,
        "vbw_hz": VIDEO_BANDWIDTH_HZ,
    }


def rotate_sweep(cfg: BenchConfig, phi_grid: Sequence[float]) -> NoiseTrace:
    if len(phi_grid) == 0:
        raise ParameterError("waveplate angle grid is empty")
    p = detected_state(cfg)

    def point(phi):
        m = measure_stokes(p, phi, cfg)
        return TracePoint(float(phi), m.variance_linear, m.variance_db, m.raw_dbm, m.corrected_db)

    return NoiseTrace("rotation", tuple(_parallel_map(point, list(phi_grid))), _metadata(cfg))


class EnergyPoint(NamedTuple):
    energy_pj: float
    squeezing_db: float
    antisqueezing_db: float
    theta_sq_deg: float


def squeezing_ellipse(p: PolarizationState) -> gaussian.SqueezingDirection:
    """Principal axes of the (S1, S2) noise, normalized to shot noise."""
    m = stokes.stokes_plane_covariance(p) / stokes.shot_noise_reference(p)
    return gaussian.ellipse_axes(m)


def energy_point(cfg: BenchConfig, energy: float) -> EnergyPoint:
    if not energy > 0:
        raise ParameterError(f"pulse energies must be positive, got {energy}")
    e = squeezing_ellipse(detected_state(cfg.with_energy(energy)))
    return EnergyPoint(float(energy), analysis.linear_to_db(e.v_min),
                       analysis.linear_to_db(e.v_max), math.degrees(e.theta))


def energy_sweep(cfg: BenchConfig, energies: Sequence[float]) -> list[EnergyPoint]:
    return _parallel_map(lambda e: energy_point(cfg, e), list(energies))


def _post_loss_vmin(cfg: BenchConfig, gamma: float) -> float:
    eta = cfg.efficiency
    block = mode_block(gamma, cfg.thermal_variance())
    return eta * gaussian.ellipse_axes(block).v_min + (1.0 - eta)


def calibrate_kerr(cfg_template: BenchConfig, target_db: float, at_energy: float,
                   tol_db: float = 1e-6) -> float:
    """Kerr coefficient (per pJ) giving ``target_db`` minimum noise at ``at_energy``.

    The detected minimum variance falls monotonically with gamma at fixed
    excess noise, so a bracketed root find on gamma is unique.
    """
    if not at_energy > 0:
        raise ParameterError("calibration energy must be positive")
    cfg = cfg_template.with_energy(at_energy)
    target = analysis.db_to_linear(target_db)
    v0 = _post_loss_vmin(cfg, 0.0)
    if target >= v0:
        if target_db > analysis.linear_to_db(v0) + 1e-12:
            raise InfeasibleTargetError(
                f"target {target_db} dB lies above the zero-Kerr noise "
                f"{analysis.linear_to_db(v0):.4f} dB")
        return 0.0
    floor = 1.0 - cfg.efficiency
    if target <= floor:
        raise InfeasibleTargetError(
            f"target {target_db} dB is below the loss floor "
            f"{analysis.loss_floor_db(cfg.efficiency):.3f} dB")

    def residual(g):
        return analysis.linear_to_db(_post_loss_vmin(cfg, g)) - target_db

    hi = 1.0
    while residual(hi) > 0:
        hi *= 2.0
        if hi > 1e8:
            raise InfeasibleTargetError(f"target {target_db} dB not reached for gamma <= 1e8")
    gamma = brentq(residual, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    if abs(residual(gamma)) > tol_db:
        raise InfeasibleTargetError("calibration did not converge")
    return gamma / at_energy


def waveplate_grid(start: float, end: float, step: float) -> list[float]:
    """Inclusive grid start, start+step, ... <= end (robust to rounding)."""
    if not step > 0:
        raise ParameterError(f"step must be positive, got {step}")
    if end < start:
        raise ParameterError(f"end {end} is below start {start}")
    n = int(math.floor((end - start) / step + 1e-9)) + 1
    return [start + i * step for i in range(n)]
