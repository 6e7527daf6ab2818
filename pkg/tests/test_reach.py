import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sphreach.reach import (
    SQRT_HALF,
    NumericalInstabilityError,
    SubintervalConfig,
    _ratio,
    asymptotic_lower_bound,
    critical_radius,
    fixed_degree_bound,
    limit_at_zero,
    limit_function_f,
    limit_function_f_printed,
    limit_function_g,
    limit_function_h,
    reach_functional,
    reach_limit_at_zero,
    rescaled_convergence,
    tail_deviation_bound,
)
from sphreach.specfun import DomainError

mpmath.mp.dps = 40


def mp_functional(n, d, theta):
    """r(theta) at 40 digits from mpmath's Jacobi polynomials."""
    lam = mpmath.mpf(d - 2) / 2
    a, b = 1 + lam, lam
    bnorm = mpmath.binomial(n + mpmath.mpf(d) / 2, n)
    m = mpmath.mpf(n) * (n + d) / (d + 2)
    c = mpmath.cos(mpmath.mpf(theta))
    g = mpmath.jacobi(n, a, b, c) / bnorm
    dp = mpmath.diff(lambda t: mpmath.jacobi(n, a, b, t), c)
    dg = -dp * mpmath.sin(mpmath.mpf(theta)) / bnorm
    return float((1 - g) / mpmath.sqrt(2 - 2 * g - dg**2 / m))


@pytest.mark.parametrize("n,d", [(2, 2), (7, 2), (30, 2), (12, 3), (9, 4)])
def test_functional_against_mpmath(n, d):
    for t in (0.3 / n, 1.9 / n, 2.1 / n, 0.7, 2.5, math.pi):
        assert reach_functional(n, d, t) == pytest.approx(mp_functional(n, d, t), rel=1e-9)


def test_functional_degree_one_is_constant():
    # n = 1 image is a round sphere of radius sqrt(3)/2
    th = np.linspace(1e-5, math.pi, 50)
    assert np.allclose(reach_functional(1, 2, th), math.sqrt(3) / 2, rtol=1e-12)


@pytest.mark.parametrize("n,d", [(3, 2), (50, 2), (400, 2), (20, 3)])
def test_limit_at_zero_matches_small_angle(n, d):
    assert reach_functional(n, d, 1e-7 / n) == pytest.approx(reach_limit_at_zero(n, d), rel=1e-9)


def test_functional_domain():
    with pytest.raises(DomainError):
        reach_functional(5, 2, 0.0)
    with pytest.raises(DomainError):
        reach_functional(5, 2, 4.0)
    with pytest.raises(DomainError):
        reach_functional(0, 2, 1.0)


def test_negative_radicand_raises():
    with pytest.raises(NumericalInstabilityError):
        _ratio(np.array([1.0]), np.array([-1e-6]))
    assert _ratio(np.array([1.0]), np.array([-1e-14]))[0] == math.inf


def test_critical_radius_small_n():
    assert critical_radius(1, 2).global_min == pytest.approx(math.sqrt(3) / 2, abs=1e-12)
    assert critical_radius(2, 2).global_min == pytest.approx(1 / math.sqrt(3), abs=1e-10)


def test_profile_structure():
    prof = critical_radius(20, 2, linear_points=20_000)
    assert len(prof.partial_infima) == 4
    assert prof.global_min == pytest.approx(min(prof.partial_infima))
    assert np.all(np.diff(prof.theta_grid) > 0)
    assert prof.global_min <= prof.values.min() + 1e-15
    assert set(prof.summary()) >= {"partial_infima", "global_min", "argmin", "cuts"}


def test_subinterval_config():
    assert SubintervalConfig().cuts(100) == pytest.approx((0.01, 100**-0.8, math.pi - 0.01))
    with pytest.raises(DomainError):
        SubintervalConfig(mid_exponent=1.5)


# ---------------------------------------------------------------- limits

def mp_f(x, d):
    nu = mpmath.mpf(d) / 2
    x = mpmath.mpf(x)
    pref = mpmath.gamma(nu + 1) * (2 / x) ** nu
    phi = pref * mpmath.besselj(nu, x)
    dphi = -pref * mpmath.besselj(nu + 1, x)
    return float((1 - phi) / mpmath.sqrt(2 - 2 * phi - (d + 2) * dphi**2))


@pytest.mark.parametrize("d", [2, 3, 4])
def test_f_against_mpmath(d):
    for x in (0.05, 0.8, 3.9, 4.1, 8.4, 37.0, 150.0):
        assert limit_function_f(x, d) == pytest.approx(mp_f(x, d), rel=1e-9)


def test_f_is_limit_of_rescaled_functional():
    x = np.array([0.5, 1.0, 1.5])
    n = 20000
    assert np.allclose(reach_functional(n, 2, x / n), limit_function_f(x), atol=1e-3)


def test_values_at_zero():
    # phi = 1 - x^2/(2(d+2)) + x^4/(8(d+2)(d+4)) + ... gives sqrt((d+4)/(3(d+2)))
    assert limit_at_zero(2) == pytest.approx(SQRT_HALF, abs=1e-12)
    for d in (3, 4, 5):
        assert limit_at_zero(d) == pytest.approx(math.sqrt((d + 4) / (3 * (d + 2))), abs=1e-12)
        assert reach_limit_at_zero(4000, d) == pytest.approx(limit_at_zero(d), abs=1e-3)
    assert limit_function_g(0.0) == pytest.approx(math.sqrt(6) / 3, abs=1e-12)
    assert limit_function_h(0.0) == pytest.approx(1.0, abs=1e-15)


def test_g_h_against_mpmath():
    for x in (0.3, 2.0, 7.0, 55.0):
        j0, j1 = mpmath.besselj(0, x), mpmath.besselj(1, x)
        g = (1 - j0) / mpmath.sqrt(2 - 2 * j0 - 2 * j1**2)
        h = (1 + j0) / mpmath.sqrt(2 + 2 * j0 - 2 * j1**2)
        assert limit_function_g(x) == pytest.approx(float(g), rel=1e-10)
        assert limit_function_h(x) == pytest.approx(float(h), rel=1e-12)


def test_printed_general_form_disagrees_at_d2():
    x = np.array([0.5, 2.0, 8.4])
    assert np.all(np.abs(limit_function_f_printed(x, 2) - limit_function_f(x, 2)) > 1e-2)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 300.0))
def test_limit_functions_positive(x):
    assert limit_function_f(x) > 0.6
    assert limit_function_g(x) > 0.5
    assert limit_function_h(x) > 0.5


def test_infima():
    lb = asymptotic_lower_bound(2)
    assert lb.grid_infimum == pytest.approx(0.6839289, abs=2e-7)
    assert lb.argmin == pytest.approx(8.417, abs=1e-2)
    assert lb.value == lb.grid_infimum
    assert fixed_degree_bound() == pytest.approx(0.546462, abs=1e-5)


def test_tail_bound_shrinks():
    assert tail_deviation_bound(2, 400) < tail_deviation_bound(2, 200) < 1


def test_asymptotic_bound_rejects_short_window():
    with pytest.raises(DomainError):
        asymptotic_lower_bound(2, x_max=50)


def test_rescaled_convergence():
    tab = rescaled_convergence([64, 128, 256, 512], 2, np.linspace(0.1, 2.0, 30))
    assert all(b < a for a, b in zip(tab.sup_errors, tab.sup_errors[1:]))
    assert tab.slope < -0.8
    with pytest.raises(DomainError):
        rescaled_convergence([64], 2, [5.0])
