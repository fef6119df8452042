"""Exact two-mode truncated-Fock reference for the Stokes operators.

Basis index of ``|n_x, n_y>`` is ``n_x * (n_max + 1) + n_y``. Everything is
dense; this is a small-photon-number oracle for checking the linearized
model, not a simulation engine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

from .errors import ParameterError, TruncationError

N_MAX_CAP = 40
NORM_TOL = 1e-10
TAIL_TOL = 1e-6


@dataclass(frozen=True)
class FockState:
    n_max: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if not 1 <= self.n_max <= N_MAX_CAP:
            raise ParameterError(f"n_max must lie in [1, {N_MAX_CAP}], got {self.n_max}")
        amp = np.asarray(self.amplitudes, dtype=complex)
        if amp.shape != ((self.n_max + 1) ** 2,):
            raise ParameterError(f"amplitude vector has wrong length {amp.shape}")
        if abs(np.vdot(amp, amp).real - 1.0) > NORM_TOL:
            raise ParameterError("Fock state is not normalized")
        amp.setflags(write=False)
        object.__setattr__(self, "amplitudes", amp)

    def populations(self) -> np.ndarray:
        """Joint photon-number distribution as an (n_max+1) x (n_max+1) array."""
        d = self.n_max + 1
        return (np.abs(self.amplitudes) ** 2).reshape(d, d)

    def tail_population(self) -> float:
        """Largest single-mode population above n_max - 2."""
        pops = self.populations()
        cut = max(self.n_max - 1, 0)
        return float(max(pops[cut:, :].sum(), pops[:, cut:].sum()))


def _coherent_1mode(alpha: complex, n_max: int) -> np.ndarray:
    n = np.arange(n_max + 1)
    if alpha == 0:
        out = np.zeros(n_max + 1, dtype=complex)
        out[0] = 1.0
        return out
    log_mag = -0.5 * abs(alpha) ** 2 + n * math.log(abs(alpha)) - 0.5 * gammaln(n + 1)
    return np.exp(log_mag) * np.exp(1j * n * np.angle(alpha))


def coherent_fock(alpha_x: complex, alpha_y: complex, n_max: int) -> FockState:
    """Product coherent state, renormalized after truncation."""
    for a in (alpha_x, alpha_y):
        if abs(a) ** 2 > n_max / 4:
            raise TruncationError(
                f"|alpha|^2 = {abs(a) ** 2:g} exceeds n_max/4 = {n_max / 4:g}; raise n_max")
    amp = np.kron(_coherent_1mode(alpha_x, n_max), _coherent_1mode(alpha_y, n_max))
    state = FockState(n_max, amp / np.linalg.norm(amp))
    if state.tail_population() >= TAIL_TOL:
        raise TruncationError("population near the truncation edge exceeds 1e-6")
    return state


@lru_cache(maxsize=8)
def _number_diag(n_max: int) -> tuple[np.ndarray, np.ndarray]:
    n = np.arange(n_max + 1, dtype=float)
    nx, ny = np.meshgrid(n, n, indexing="ij")
    return nx.ravel(), ny.ravel()


def kerr_unitary_apply(state: FockState, phi_nl: float, mode: str) -> FockState:
    """Number-diagonal self-phase modulation ``exp(i phi_nl n^2)`` on one mode."""
    if mode not in ("x", "y"):
        raise ParameterError(f"mode must be 'x' or 'y', got {mode!r}")
    nx, ny = _number_diag(state.n_max)
    n = nx if mode == "x" else ny
    return FockState(state.n_max, state.amplitudes * np.exp(1j * phi_nl * n * n))


@lru_cache(maxsize=8)
def stokes_operators(n_max: int) -> tuple[np.ndarray, ...]:
    """Dense matrices (S0, S1, S2, S3) in the truncated product basis."""
    d = n_max + 1
    a = np.diag(np.sqrt(np.arange(1, d, dtype=float)), k=1)
    eye = np.eye(d)
    ax = np.kron(a, eye)
    ay = np.kron(eye, a)
    nx = ax.T @ ax
    ny = ay.T @ ay
    s2 = ax.T @ ay + ay.T @ ax
    s3 = 1j * (ay.T @ ax - ax.T @ ay)
    ops = (nx + ny + 0j, nx - ny + 0j, s2 + 0j, s3)
    for op in ops:
        op.setflags(write=False)
    return ops


def stokes_expectation(state: FockState, which: int) -> float:
    op = stokes_operators(state.n_max)[which]
    return float(np.vdot(state.amplitudes, op @ state.amplitudes).real)


def stokes_variance_exact(state: FockState, theta: float) -> float:
    """<S_theta^2> - <S_theta>^2 with S_theta = cos(theta) S1 + sin(theta) S2."""
    _, s1, s2, _ = stokes_operators(state.n_max)
    v = (math.cos(theta) * s1 + math.sin(theta) * s2) @ state.amplitudes
    mean = np.vdot(state.amplitudes, v).real
    return float(np.vdot(v, v).real - mean ** 2)


def commutator_check(n_max: int, safe_only: bool = True) -> float:
    """Largest entry of ``[Si, Sj] - 2i eps_ijk Sk`` and ``[S0, Si]``.

    With ``safe_only`` the residual is restricted to basis states of total
    photon number <= n_max - 2, where truncation does not reach; otherwise
    the full truncated space is used and the edge artefact shows up.
    """
    if n_max < 3:
        raise ParameterError("commutator_check needs n_max >= 3")
    s0, s1, s2, s3 = stokes_operators(n_max)
    nx, ny = _number_diag(n_max)
    keep = (nx + ny <= n_max - 2) if safe_only else np.ones_like(nx, dtype=bool)
    sel = np.ix_(keep, keep)

    def comm(p, q):
        return p @ q - q @ p

    residuals = [
        comm(s1, s2) - 2j * s3,
        comm(s2, s3) - 2j * s1,
        comm(s3, s1) - 2j * s2,
        comm(s0, s1), comm(s0, s2), comm(s0, s3),
    ]
    return float(max(np.max(np.abs(r[sel])) for r in residuals))


def circular_kerr_state(alpha2: float, gamma: float, n_max: int) -> FockState:
    """Circular coherent input with Kerr evolution on both modes.

    The per-photon phase is ``gamma / alpha2`` so the linearized shear
    parameter of each mode equals ``gamma``.
    """
    a = math.sqrt(alpha2 / 2.0)
    state = coherent_fock(a, 1j * a, n_max)
    if gamma == 0:
        return state
    phi_nl = gamma / alpha2
    return kerr_unitary_apply(kerr_unitary_apply(state, phi_nl, "x"), phi_nl, "y")
