# tests/test_specfun.py

import math

import mpmath
import numpy as np
import pytest
from numpy.polynomial import polynomial as P
from scipy import special

from backend.service.errors import MeijerGConvergenceError
from backend.service.specfun import (
    MeijerGSpec,
    bessel_i,
    exp_integral_ei,
    meijer_g,
    meijer_g_leading_terms,
    perturb_coinciding,
    log_phi_coeffs,
    phi_coeffs,
    scaled_exp1,
    upper_incomplete_gamma,
)


def test_phi_coeffs_small_cases():
    assert phi_coeffs(0, 0, 3) == 1.0
    assert phi_coeffs(1, 0, 3) == 0.0
    # (1 + x)^2
    assert phi_coeffs(1, 2, 1) == pytest.approx(2.0)
    assert phi_coeffs(2, 2, 1) == pytest.approx(1.0)
    assert phi_coeffs(3, 2, 1) == 0.0
    assert phi_coeffs(-1, 2, 1) == 0.0


@pytest.mark.parametrize("j,m", [(1, 3), (3, 2), (5, 4)])
def test_phi_coeffs_match_polynomial_power(j, m):
    base = [1.0 / math.factorial(t) for t in range(m + 1)]
    expected = P.polypow(base, j)
    got = [phi_coeffs(i, j, m) for i in range(j * m + 1)]
    np.testing.assert_allclose(got, expected, rtol=1e-12)


def test_log_phi_coeffs_agree_and_stay_finite():
    np.testing.assert_allclose(np.exp(log_phi_coeffs(5, 4)), [phi_coeffs(i, 5, 4) for i in range(21)], rtol=1e-12)
    deep = log_phi_coeffs(9, 63)
    assert deep.size == 9 * 63 + 1
    assert np.all(np.isfinite(deep))
    # top coefficient of (sum_{t<=63} x^t/t!)^9 is (1/63!)^9
    assert deep[-1] == pytest.approx(-9.0 * math.lgamma(64.0), rel=1e-12)


def test_phi_coeffs_rejects_negative_orders():
    with pytest.raises(ValueError):
        phi_coeffs(0, -1, 2)


def test_meijer_g_exponential():
    spec = MeijerGSpec(1, 0, (), (0.0,))
    x = np.array([0.1, 1.0, 5.0])
    np.testing.assert_allclose(meijer_g(spec, x), np.exp(-x), rtol=1e-7)


def test_meijer_g_matches_mpmath_for_gamma_rate_kernel():
    A = 4.0
    spec = MeijerGSpec(1, 3, (1.0 - A, 1.0, 1.0), (1.0, 0.0))
    for x in (0.05, 0.7, 3.0):
        expected = float(mpmath.meijerg([[1.0 - A, 1.0, 1.0], []], [[1.0], [0.0]], x))
        assert meijer_g(spec, x) == pytest.approx(expected, rel=1e-6)


def test_meijer_g_bessel_k():
    spec = MeijerGSpec(2, 0, (), (0.0, 0.0))
    for x in (0.01, 1.0, 4.0):
        assert meijer_g(spec, x) == pytest.approx(2.0 * special.k0(2.0 * math.sqrt(x)), rel=1e-6)


def test_meijer_g_rejects_non_decaying_contour():
    with pytest.raises(MeijerGConvergenceError):
        meijer_g(MeijerGSpec(1, 0, (0.5, 0.5), (0.0,)), 1.0)


def test_meijer_g_rejects_non_positive_argument():
    with pytest.raises(ValueError):
        meijer_g(MeijerGSpec(1, 0, (), (0.0,)), 0.0)
    with pytest.raises(ValueError):
        meijer_g(MeijerGSpec(1, 0, (), (0.0,)), -1.0)


def test_leading_terms_handle_coinciding_poles():
    spec = MeijerGSpec(2, 0, (), (0.0, 0.0))
    x = 1e-4
    assert meijer_g_leading_terms(spec, x) == pytest.approx(2.0 * special.k0(2.0 * math.sqrt(x)), rel=2e-3)


def test_perturb_coinciding_separates_integer_spaced_values():
    out = perturb_coinciding((0.5, 1.5, 0.25))
    assert out[0] == 0.5
    assert out[1] != 1.5
    assert out[2] == 0.25


def test_scaled_exp1():
    assert scaled_exp1(1.0) == pytest.approx(0.596347362323194, rel=1e-10)
    below, above = scaled_exp1(np.array([50.0 - 1e-9, 50.0]))
    assert below == pytest.approx(above, rel=1e-8)
    assert scaled_exp1(1e4) == pytest.approx(1.0 / (1e4 + 1.0), rel=1e-6)
    with pytest.raises(ValueError):
        scaled_exp1(0.0)


def test_exp_integral_ei_singularity():
    assert exp_integral_ei(1.0) == pytest.approx(1.8951178163559368)
    with pytest.raises(ValueError):
        exp_integral_ei(0.0)


def test_bessel_i_overflow_needs_scaling():
    with pytest.raises(OverflowError):
        bessel_i(0, 1000.0)
    assert bessel_i(0, 1000.0, scaled=True) == pytest.approx(1.0 / math.sqrt(2.0 * math.pi * 1000.0), rel=1e-3)


def test_upper_incomplete_gamma():
    assert upper_incomplete_gamma(1.0, 2.0) == pytest.approx(math.exp(-2.0))
    with pytest.raises(ValueError):
        upper_incomplete_gamma(0.0, 1.0)
