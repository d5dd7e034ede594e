import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from stokesreg.kernels import (SERIES_RHO, Smoothing, SmoothingKind, kernel_factor, moment_integrals,
                               smoothing, smoothing_quotient_rho, smoothing_rho, stokeslet,
                               stresslet, stresslet_apply)

mpmath.mp.dps = 50

# P(rho^2) in s = erf - (2/sqrt(pi)) rho P exp(-rho^2), ascending powers of rho^2
POLY = {
    Smoothing.S1: [], Smoothing.S2: [1], Smoothing.S3: [1, mpmath.mpf(2) / 3],
    Smoothing.S1_SHARP: [mpmath.mpf(-5) / 3, mpmath.mpf(2) / 3],
    Smoothing.S2_SHARP: [1, mpmath.mpf(-14) / 3, mpmath.mpf(4) / 3],
    Smoothing.S3_SHARP: [1, mpmath.mpf(2) / 3, -4, mpmath.mpf(8) / 9],
}
POWER = {Smoothing.S1: 1, Smoothing.S1_SHARP: 1, Smoothing.S2: 3, Smoothing.S2_SHARP: 3,
         Smoothing.S3: 5, Smoothing.S3_SHARP: 5}


def mp_smoothing(tag, rho):
    rho = mpmath.mpf(rho)
    poly = sum(c * rho ** (2 * k) for k, c in enumerate(POLY[tag]))
    return mpmath.erf(rho) - 2 / mpmath.sqrt(mpmath.pi) * rho * poly * mpmath.exp(-rho * rho)


@pytest.mark.parametrize("tag", list(Smoothing))
@pytest.mark.parametrize("rho", [1e-3, 0.1, 0.49, 0.51, 1.0, 2.5, 6.0])
def test_quotient_matches_high_precision(tag, rho):
    exact = float(mp_smoothing(tag, rho) / mpmath.mpf(rho) ** POWER[tag])
    got = smoothing_quotient_rho(tag, rho)[0]
    assert got == pytest.approx(exact, rel=1e-12)


@pytest.mark.parametrize("tag", list(Smoothing))
def test_quotient_continuous_at_series_switch(tag):
    below = smoothing_quotient_rho(tag, np.nextafter(SERIES_RHO, 0))[0]
    above = smoothing_quotient_rho(tag, SERIES_RHO)[0]
    assert below == pytest.approx(above, rel=1e-13)


@pytest.mark.parametrize("tag", list(Smoothing))
def test_smoothing_limits(tag):
    assert smoothing_rho(tag, 0.0) == 0.0
    assert smoothing_rho(tag, 12.0) == pytest.approx(1.0, abs=1e-15)


def test_smoothing_rejects_negative_distance():
    with pytest.raises(ValueError):
        smoothing(SmoothingKind(Smoothing.S1, 0.1), -1.0)
    with pytest.raises(ValueError):
        SmoothingKind(Smoothing.S1, 0.0)


def test_kernel_factor_far_is_plain_power():
    kind = SmoothingKind(Smoothing.S3_SHARP, 0.1)
    assert kernel_factor(kind, 2.0) == pytest.approx(1 / 32, rel=1e-15)


def test_stokeslet_example():
    s = stokeslet(np.array([1.0, 0.0, 0.0]), np.zeros(3))
    assert np.allclose(s, np.diag([2.0, 1.0, 1.0]))


def test_stresslet_example():
    t = stresslet(np.array([1.0, 0.0, 0.0]), np.zeros(3))
    assert t[0, 0, 0] == -6.0
    assert np.count_nonzero(t) == 1


def test_singular_evaluation_raises():
    with pytest.raises(ValueError):
        stokeslet(np.zeros(3), np.zeros(3))
    with pytest.raises(ValueError):
        stresslet_apply(np.zeros(3), np.zeros(3), np.ones(3), np.ones(3))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=9, max_size=9))
def test_stokeslet_symmetric_and_stresslet_contraction(v):
    y, q, n = np.array(v[:3]), np.array(v[3:6]), np.array(v[6:])
    if np.linalg.norm(y) < 1e-3:
        return
    s = stokeslet(y, np.zeros(3))
    assert np.allclose(s, s.T)
    full = np.einsum("ijk,j,k->i", stresslet(y, np.zeros(3)), q, n)
    assert np.allclose(full, stresslet_apply(y, np.zeros(3), q, n), rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("lam", [0.0, 0.3, 1.5])
def test_moment_integral_i1_by_quadrature(lam):
    def f(eta):
        rho = np.hypot(eta, lam)
        return (smoothing_rho(Smoothing.S1, rho) - 1.0) / rho * eta
    assert float(moment_integrals(lam).I1) == pytest.approx(quad(f, 0, np.inf)[0], abs=1e-12)


def test_moment_integrals_even_and_decaying():
    a, b = moment_integrals(0.7), moment_integrals(-0.7)
    assert a.I3b == b.I3b and a.I1 == b.I1
    far = moment_integrals(8.0)
    assert max(abs(far.I1), abs(far.I2a), abs(far.I2b), abs(far.I3a), abs(far.I3b)) < 1e-28
    assert moment_integrals(0.0).I3a == 0.0
