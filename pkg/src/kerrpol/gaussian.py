"""Covariance-matrix representation of Gaussian optical states.

Quadratures are ordered ``(X1, Y1, X2, Y2, ...)`` with ``X = a + a^dagger``
and ``Y = -i(a - a^dagger)``, so the vacuum (shot-noise) variance of every
quadrature is exactly 1 and a coherent amplitude ``alpha`` has mean
``X = 2 Re(alpha)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DimensionError, ParameterError

SYMMETRY_TOL = 1e-12
PSD_TOL = 1e-10
SYMPLECTIC_TOL = 1e-12
DEGENERACY_TOL = 1e-12


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def symplectic_form(n_modes: int) -> np.ndarray:
    """Block-diagonal antisymmetric form ``Omega`` for ``n_modes`` modes."""
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def mode_indices(modes: Sequence[int]) -> np.ndarray:
    return np.array([i for m in modes for i in (2 * m, 2 * m + 1)], dtype=int)


@dataclass(frozen=True)
class GaussianState:
    """Immutable Gaussian state: mean quadrature vector plus covariance."""

    n_modes: int
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        if int(self.n_modes) != self.n_modes or self.n_modes < 1:
            raise DimensionError(f"n_modes must be a positive integer, got {self.n_modes}")
        dim = 2 * self.n_modes
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        if mean.shape != (dim,):
            raise DimensionError(f"mean must have length {dim}, got shape {mean.shape}")
        if cov.shape != (dim, dim):
            raise DimensionError(f"cov must be {dim}x{dim}, got shape {cov.shape}")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise ParameterError("state contains non-finite entries")
        scale = max(1.0, float(np.max(np.abs(cov))))
        if np.max(np.abs(cov - cov.T)) > SYMMETRY_TOL * scale:
            raise ParameterError("covariance matrix is not symmetric")
        cov = 0.5 * (cov + cov.T)
        if np.linalg.eigvalsh(cov)[0] < -PSD_TOL * scale:
            raise ParameterError("covariance matrix is not positive semidefinite")
        object.__setattr__(self, "mean", _frozen(mean))
        object.__setattr__(self, "cov", _frozen(cov))

    def block(self, mode: int) -> np.ndarray:
        """2x2 covariance block of a single mode."""
        _check_mode(self, mode)
        return self.cov[2 * mode:2 * mode + 2, 2 * mode:2 * mode + 2]

    def mode_mean(self, mode: int) -> np.ndarray:
        _check_mode(self, mode)
        return self.mean[2 * mode:2 * mode + 2]

    def cross(self, mode_a: int, mode_b: int) -> np.ndarray:
        """2x2 cross-covariance block between two modes."""
        _check_mode(self, mode_a)
        _check_mode(self, mode_b)
        return self.cov[2 * mode_a:2 * mode_a + 2, 2 * mode_b:2 * mode_b + 2]


def _check_mode(state: GaussianState, mode: int) -> None:
    if not (0 <= mode < state.n_modes):
        raise DimensionError(f"mode {mode} out of range for {state.n_modes}-mode state")


@dataclass(frozen=True)
class SymplecticTransform:
    """Linear quadrature map acting on ``target_modes`` (2k x 2k matrix)."""

    matrix: np.ndarray
    target_modes: tuple[int, ...] = (0,)

    def __post_init__(self):
        modes = tuple(int(m) for m in self.target_modes)
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (2 * len(modes), 2 * len(modes)):
            raise DimensionError(
                f"matrix shape {m.shape} does not match {len(modes)} target modes")
        if len(set(modes)) != len(modes):
            raise DimensionError(f"target modes must be distinct, got {modes}")
        if not np.all(np.isfinite(m)):
            raise ParameterError("transform matrix contains non-finite entries")
        object.__setattr__(self, "matrix", _frozen(m))
        object.__setattr__(self, "target_modes", modes)

    def symplectic_residual(self) -> float:
        """max |S Omega S^T - Omega|; zero for lossless transforms."""
        omega = symplectic_form(len(self.target_modes))
        return float(np.max(np.abs(self.matrix @ omega @ self.matrix.T - omega)))

    def is_symplectic(self, tol: float = SYMPLECTIC_TOL) -> bool:
        return self.symplectic_residual() < tol


def _finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ParameterError(f"{name} must be finite, got {value}")
    return value


def make_coherent(n_modes: int, means: Sequence[float]) -> GaussianState:
    """Coherent (vacuum-noise) state with the given quadrature means."""
    means = np.asarray(means, dtype=float)
    if means.shape != (2 * n_modes,):
        raise DimensionError(
            f"expected {2 * n_modes} quadrature means for {n_modes} modes, got {means.shape}")
    return GaussianState(n_modes, means, np.eye(2 * n_modes))


def vacuum(n_modes: int) -> GaussianState:
    return make_coherent(n_modes, np.zeros(2 * n_modes))


def kerr_shear(gamma: float, mode: int = 0) -> SymplecticTransform:
    """Linearized self-phase modulation about a mean field along X.

    ``dX' = dX`` and ``dY' = dY + 2*gamma*dX``: amplitude noise is untouched
    while phase noise picks up an amplitude-proportional kick.
    """
    gamma = _finite("gamma", gamma)
    if gamma < 0:
        raise ParameterError(f"gamma must be non-negative, got {gamma}")
    return SymplecticTransform(np.array([[1.0, 0.0], [2.0 * gamma, 1.0]]), (mode,))


def phase_rotation(phi: float, mode: int = 0) -> SymplecticTransform:
    phi = _finite("phi", phi)
    c, s = math.cos(phi), math.sin(phi)
    return SymplecticTransform(np.array([[c, -s], [s, c]]), (mode,))


def beam_splitter(theta: float, modes: tuple[int, int] = (0, 1)) -> SymplecticTransform:
    """Real beam splitter with amplitude transmissivity ``cos(theta)``."""
    theta = _finite("theta", theta)
    c, s = math.cos(theta), math.sin(theta)
    i2 = np.eye(2)
    return SymplecticTransform(np.block([[c * i2, s * i2], [-s * i2, c * i2]]), modes)


def _embed(state: GaussianState, t: SymplecticTransform) -> np.ndarray:
    for m in t.target_modes:
        _check_mode(state, m)
    full = np.eye(2 * state.n_modes)
    idx = mode_indices(t.target_modes)
    full[np.ix_(idx, idx)] = t.matrix
    return full


def apply_transform(state: GaussianState, t: SymplecticTransform) -> GaussianState:
    s = _embed(state, t)
    cov = s @ state.cov @ s.T
    return GaussianState(state.n_modes, s @ state.mean, 0.5 * (cov + cov.T))


def loss_channel(state: GaussianState, eta: float, mode: int) -> GaussianState:
    """Beam-splitter admixture of vacuum with power transmissivity ``eta``."""
    eta = _finite("eta", eta)
    if not 0.0 <= eta <= 1.0:
        raise ParameterError(f"transmissivity must lie in [0, 1], got {eta}")
    _check_mode(state, mode)
    scale = np.ones(2 * state.n_modes)
    scale[2 * mode:2 * mode + 2] = math.sqrt(eta)
    cov = state.cov * np.outer(scale, scale)
    cov[2 * mode, 2 * mode] += 1.0 - eta
    cov[2 * mode + 1, 2 * mode + 1] += 1.0 - eta
    return GaussianState(state.n_modes, state.mean * scale, 0.5 * (cov + cov.T))


def add_classical_noise(state: GaussianState, noise: np.ndarray,
                        modes: Sequence[int]) -> GaussianState:
    """Add a positive semidefinite classical noise matrix on ``modes``.

    Off-diagonal blocks inject correlated noise between modes; a single-mode
    ``diag(0, v)`` adds excess phase noise.
    """
    noise = np.asarray(noise, dtype=float)
    idx = mode_indices(modes)
    for m in modes:
        _check_mode(state, m)
    if noise.shape != (len(idx), len(idx)):
        raise DimensionError(f"noise shape {noise.shape} does not match modes {tuple(modes)}")
    if np.max(np.abs(noise - noise.T), initial=0.0) > SYMMETRY_TOL * max(1.0, np.max(np.abs(noise))):
        raise ParameterError("classical noise matrix must be symmetric")
    if np.linalg.eigvalsh(0.5 * (noise + noise.T))[0] < -PSD_TOL:
        raise ParameterError("classical noise matrix must be positive semidefinite")
    cov = state.cov.copy()
    cov[np.ix_(idx, idx)] += noise
    return GaussianState(state.n_modes, state.mean, 0.5 * (cov + cov.T))


def quadrature_variance(state: GaussianState, mode: int, theta: float) -> float:
    """Variance of ``cos(theta) X + sin(theta) Y`` in shot-noise units."""
    u = np.array([math.cos(theta), math.sin(theta)])
    return float(u @ state.block(mode) @ u)


class SqueezingDirection(NamedTuple):
    theta: float
    v_min: float
    v_max: float
    degenerate: bool


def wrap_half_pi(theta: float) -> float:
    """Map an axis angle (period pi) into [-pi/2, pi/2)."""
    t = (theta + math.pi / 2) % math.pi - math.pi / 2
    return -math.pi / 2 if t >= math.pi / 2 else t


def ellipse_axes(block: np.ndarray) -> SqueezingDirection:
    """Minor axis of a 2x2 symmetric noise ellipse.

    An isotropic block has no preferred axis; it returns ``theta = 0`` with
    the degeneracy flag set.
    """
    a, b, d = float(block[0, 0]), float(block[0, 1]), float(block[1, 1])
    mid = 0.5 * (a + d)
    rad = math.hypot(0.5 * (a - d), b)
    v_min, v_max = mid - rad, mid + rad
    if rad <= DEGENERACY_TOL * max(1.0, abs(mid)):
        return SqueezingDirection(0.0, v_min, v_max, True)
    major = 0.5 * math.atan2(2.0 * b, a - d)
    return SqueezingDirection(wrap_half_pi(major + math.pi / 2), v_min, v_max, False)


def min_variance_direction(state: GaussianState, mode: int) -> SqueezingDirection:
    return ellipse_axes(state.block(mode))
