import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kerrpol import gaussian as g
from kerrpol import stokes
from kerrpol.errors import LinearizationError, UndefinedReferenceError

SQ2 = math.sqrt(2)


def kerr_block(gamma, thermal=0.0):
    return np.array([[1.0, 2 * gamma], [2 * gamma, 1 + 4 * gamma ** 2 + thermal]])


def test_circular_means():
    p = stokes.circular_state(1.0)
    assert p.alpha_x == pytest.approx(1 / SQ2) and p.alpha_y == pytest.approx(1 / SQ2)
    assert np.allclose(stokes.stokes_means(p), (1, 0, 0, 1), atol=1e-15)


def test_linear_polarizations():
    px = stokes.PolarizationState(g.make_coherent(2, stokes.mean_vector(1.5, 0.0, 0.0)), 1.5, 0.0, 0.0)
    assert stokes.stokes_means(px) == (2.25, 2.25, 0.0, 0.0)
    pd = stokes.PolarizationState(g.make_coherent(2, stokes.mean_vector(1.0, 1.0, 0.0)), 1.0, 1.0, 0.0)
    m = stokes.stokes_means(pd)
    assert (m.s1, m.s2, m.s3) == (0.0, m.s0, 0.0)


def test_mean_consistency_enforced():
    with pytest.raises(ValueError):
        stokes.PolarizationState(g.make_coherent(2, [1, 0, 0, 1]), 1.0, 1.0, 0.0)


@pytest.mark.parametrize("theta", np.linspace(0, math.pi, 7))
def test_coherent_at_shot_noise(theta):
    p = stokes.circular_state(9.0)
    assert stokes.stokes_theta_variance(p, theta) == pytest.approx(9.0, rel=1e-14)
    assert stokes.polarization_squeezing_db(p, theta) == pytest.approx(0.0, abs=1e-12)


def test_kerr_examples():
    a2 = 4.0
    p = stokes.circular_state(a2, kerr_block(1.0))
    assert stokes.stokes_theta_variance(p, -math.pi / 8) == pytest.approx(a2 * (3 - 2 * SQ2), rel=1e-12)
    assert stokes.stokes_theta_variance(p, 0.0) == pytest.approx(a2, rel=1e-14)
    assert stokes.polarization_squeezing_db(p, -math.pi / 8) == pytest.approx(10 * math.log10(3 - 2 * SQ2), abs=1e-10)
    assert 10 * math.log10(3 - 2 * SQ2) == pytest.approx(-7.66, abs=0.005)


def test_measured_ratio_example():
    # a Stokes variance at 0.309 of |<S3>| is the -5.1 dB headline figure
    p = stokes.circular_state(1.0, np.diag([0.309, 1 / 0.309]))
    assert stokes.polarization_squeezing_db(p, 0.0) == pytest.approx(-5.1, abs=0.005)


def test_zero_mean_errors():
    p = stokes.PolarizationState(g.vacuum(2), 0.0, 0.0, 0.0)
    with pytest.raises(LinearizationError):
        stokes.stokes_theta_variance(p, 0.3)
    px = stokes.PolarizationState(g.make_coherent(2, stokes.mean_vector(1.0, 0.0, 0.0)), 1.0, 0.0, 0.0)
    with pytest.raises(UndefinedReferenceError):
        stokes.polarization_squeezing_db(px, 0.0)


def test_heisenberg_examples():
    a2 = 3.0
    coh = stokes.heisenberg_check(stokes.circular_state(a2))
    assert coh.product == pytest.approx(a2 ** 2, rel=1e-14)
    assert coh.bound == pytest.approx(a2 ** 2, rel=1e-14)
    assert coh.satisfied
    kerr = stokes.circular_state(a2, kerr_block(1.0))
    h = stokes.heisenberg_check(kerr)
    assert stokes.stokes_variance(kerr, 1) == pytest.approx(a2)
    assert stokes.stokes_variance(kerr, 2) == pytest.approx(5 * a2)
    assert h.product == pytest.approx(5 * a2 ** 2)
    lossy = g.loss_channel(g.loss_channel(kerr.gauss, 0.5, 0), 0.5, 1)
    assert stokes.heisenberg_check(stokes.PolarizationState.from_gaussian(lossy)).satisfied


def test_general_form_matches_paper_reduction():
    # (alpha^2/2) [Vx + Vy - 2 Cov_xy] evaluated in each mode's own frame
    rng = np.random.default_rng(7)
    a2 = 5.0
    for _ in range(20):
        m = rng.standard_normal((4, 4))
        cov = m @ m.T + np.eye(4)
        a = math.sqrt(a2 / 2)
        local = g.GaussianState(2, [2 * a, 0, 2 * a, 0], cov)
        p = stokes.PolarizationState.from_gaussian(
            g.apply_transform(local, g.phase_rotation(math.pi / 2, 1)))
        for theta in np.linspace(0, math.pi, 5):
            u = np.array([math.cos(theta), math.sin(theta)])
            vx = u @ cov[:2, :2] @ u
            vy = u @ cov[2:, 2:] @ u
            cxy = u @ cov[:2, 2:] @ u
            assert stokes.stokes_theta_variance(p, theta) == pytest.approx(a2 / 2 * (vx + vy - 2 * cxy), rel=1e-12)


def test_cross_covariance_toggle():
    # Correlated x/y amplitude noise cancels in the difference current.
    block = kerr_block(0.5)
    p0 = stokes.circular_state(2.0, block)
    p1 = stokes.circular_state(2.0, block, cross=np.diag([0.5, 0.0]))
    assert stokes.stokes_theta_variance(p1, 0.0) == pytest.approx(stokes.stokes_theta_variance(p0, 0.0) - 1.0)


def test_linearization_vs_sampled_fields():
    """Nonlinear Stokes values of sampled fields approach the linear prediction."""
    rng = np.random.default_rng(11)
    a2 = 1e6
    gamma = 0.8
    p = stokes.circular_state(a2, kerr_block(gamma, thermal=2.0))
    q = rng.multivariate_normal(p.gauss.mean, p.gauss.cov, size=400_000)
    ax = (q[:, 0] + 1j * q[:, 1]) / 2
    ay = (q[:, 2] + 1j * q[:, 3]) / 2
    s1 = np.abs(ax) ** 2 - np.abs(ay) ** 2
    s2 = 2 * np.real(np.conj(ax) * ay)
    for theta in (0.0, -0.3, 0.9, math.pi / 2):
        sample = math.cos(theta) * s1 + math.sin(theta) * s2
        assert sample.var() == pytest.approx(stokes.stokes_theta_variance(p, theta), rel=0.02)


@settings(max_examples=60, deadline=None)
@given(st.floats(0, 6), st.floats(0, 10), st.floats(1e-3, 1e6))
def test_shot_noise_anchor_and_periodicity(gamma, thermal, a2):
    p = stokes.circular_state(a2, kerr_block(gamma, thermal))
    assert stokes.stokes_theta_variance(p, 0.0) == pytest.approx(abs(stokes.stokes_means(p).s3), rel=1e-9)
    for theta in np.linspace(-1.5, 1.5, 9):
        v = stokes.stokes_theta_variance(p, theta)
        assert stokes.stokes_theta_variance(p, theta + math.pi) == pytest.approx(v, rel=1e-12)
        u = np.array([math.cos(theta), math.sin(theta)])
        assert v == pytest.approx(a2 * (u @ kerr_block(gamma, thermal) @ u), rel=1e-12)
    assert stokes.heisenberg_check(p).satisfied
