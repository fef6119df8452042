"""Quantum Stokes parameters of two-mode Gaussian polarization states.

Mode 0 is the x polarization, mode 1 the y polarization. Fluctuations are
propagated to first order around the mean fields: each Stokes operator is
bilinear in the mode amplitudes, so its fluctuation is a fixed linear
combination of the four lab-frame quadratures and its variance is a
quadratic form in the covariance matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import gaussian
from .errors import DimensionError, LinearizationError, ParameterError, UndefinedReferenceError
from .gaussian import GaussianState

CONSISTENCY_TOL = 1e-12
HEISENBERG_RTOL = 1e-9


def mean_vector(alpha_x: float, alpha_y: float, rel_phase: float) -> np.ndarray:
    return np.array([2.0 * alpha_x, 0.0,
                     2.0 * alpha_y * math.cos(rel_phase), 2.0 * alpha_y * math.sin(rel_phase)])


@dataclass(frozen=True)
class PolarizationState:
    """Two-mode Gaussian state together with its mean polarization.

    ``alpha_x``/``alpha_y`` are real mean amplitudes (sqrt of photons per
    analysis window); the x field is taken real and ``rel_phase`` is the phase
    of the y field relative to it.
    """

    gauss: GaussianState
    alpha_x: float
    alpha_y: float
    rel_phase: float

    def __post_init__(self):
        if self.gauss.n_modes != 2:
            raise DimensionError("a polarization state needs exactly two modes")
        if self.alpha_x < 0 or self.alpha_y < 0:
            raise ParameterError("mean amplitudes must be non-negative")
        expected = mean_vector(self.alpha_x, self.alpha_y, self.rel_phase)
        tol = CONSISTENCY_TOL * max(1.0, float(np.max(np.abs(expected))))
        if np.max(np.abs(self.gauss.mean - expected)) > tol:
            raise ParameterError("Gaussian mean vector inconsistent with polarization amplitudes")

    @classmethod
    def from_gaussian(cls, gauss: GaussianState) -> "PolarizationState":
        """Read the mean polarization off a state whose x mean lies along X."""
        xx, xy, yx, yy = gauss.mean
        if abs(xy) > CONSISTENCY_TOL * max(1.0, abs(xx)) or xx < 0:
            raise ParameterError("x-mode mean must lie on the positive X axis")
        alpha_y = 0.5 * math.hypot(yx, yy)
        rel_phase = math.atan2(yy, yx) if alpha_y > 0 else 0.0
        # Rebuild the mean so the consistency check cannot trip on rounding.
        fixed = GaussianState(2, mean_vector(0.5 * xx, alpha_y, rel_phase), gauss.cov)
        return cls(fixed, float(0.5 * xx), float(alpha_y), float(rel_phase))

    @property
    def alpha2(self) -> float:
        """Total mean photon number alpha_x^2 + alpha_y^2."""
        return self.alpha_x ** 2 + self.alpha_y ** 2


def circular_state(alpha2: float, block=None, cross=None) -> PolarizationState:
    """Circularly polarized state (rel_phase = pi/2, equal amplitudes).

    ``block`` is the 2x2 covariance of each mode in its own amplitude/phase
    frame; ``cross`` an optional x-y cross-covariance in those frames. The y
    mode is then rotated by pi/2, as the relative-phase lock does.
    """
    if alpha2 < 0:
        raise ParameterError("alpha2 must be non-negative")
    a = math.sqrt(alpha2 / 2.0)
    block = np.eye(2) if block is None else np.asarray(block, dtype=float)
    cross = np.zeros((2, 2)) if cross is None else np.asarray(cross, dtype=float)
    cov = np.block([[block, cross], [cross.T, block]])
    local = GaussianState(2, [2 * a, 0.0, 2 * a, 0.0], cov)
    locked = gaussian.apply_transform(local, gaussian.phase_rotation(math.pi / 2, mode=1))
    return PolarizationState(GaussianState(2, mean_vector(a, a, math.pi / 2), locked.cov),
                             a, a, math.pi / 2)


class StokesMean(NamedTuple):
    s0: float
    s1: float
    s2: float
    s3: float


def stokes_means(p: PolarizationState) -> StokesMean:
    ax, ay, phi = p.alpha_x, p.alpha_y, p.rel_phase
    return StokesMean(ax * ax + ay * ay, ax * ax - ay * ay,
                      2 * ax * ay * math.cos(phi), 2 * ax * ay * math.sin(phi))


def stokes_gradients(p: PolarizationState) -> np.ndarray:
    """Rows: d S_k / d(Xx, Yx, Xy, Yy) for k = 0..3 at the mean field."""
    ax, ay = p.alpha_x, p.alpha_y
    c, s = math.cos(p.rel_phase), math.sin(p.rel_phase)
    return np.array([
        [ax, 0.0, ay * c, ay * s],
        [ax, 0.0, -ay * c, -ay * s],
        [ay * c, ay * s, ax, 0.0],
        [ay * s, -ay * c, 0.0, ax],
    ])


def _require_linearizable(p: PolarizationState) -> None:
    if p.alpha2 == 0.0:
        raise LinearizationError("linearized Stokes noise is undefined at zero mean field")


def stokes_plane_covariance(p: PolarizationState) -> np.ndarray:
    """Linearized 2x2 covariance of (S1, S2)."""
    _require_linearizable(p)
    g = stokes_gradients(p)[1:3]
    return g @ p.gauss.cov @ g.T


def stokes_theta_variance(p: PolarizationState, theta: float) -> float:
    """Linearized variance of ``S_theta = cos(theta) S1 + sin(theta) S2``."""
    u = np.array([math.cos(theta), math.sin(theta)])
    return float(u @ stokes_plane_covariance(p) @ u)


def stokes_variance(p: PolarizationState, which: int) -> float:
    _require_linearizable(p)
    g = stokes_gradients(p)[which]
    return float(g @ p.gauss.cov @ g)


class HeisenbergCheck(NamedTuple):
    product: float
    bound: float
    satisfied: bool


def heisenberg_check(p: PolarizationState) -> HeisenbergCheck:
    """Var(S1) Var(S2) against <S3>^2."""
    m = stokes_plane_covariance(p)
    product = float(m[0, 0] * m[1, 1])
    bound = stokes_means(p).s3 ** 2
    return HeisenbergCheck(product, bound, product >= bound * (1 - HEISENBERG_RTOL))


def shot_noise_reference(p: PolarizationState) -> float:
    s3 = abs(stokes_means(p).s3)
    if s3 == 0.0:
        raise UndefinedReferenceError("|<S3>| = 0: no shot-noise reference for this state")
    return s3


def polarization_squeezing_db(p: PolarizationState, theta: float) -> float:
    """Var(S_theta) relative to |<S3>| in dB; negative means squeezed."""
    ref = shot_noise_reference(p)
    return 10.0 * math.log10(stokes_theta_variance(p, theta) / ref)
