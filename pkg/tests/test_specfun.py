import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sphreach.specfun import (
    DomainError,
    HarmonicIndex,
    JacobiParams,
    bessel_j,
    binom_real,
    gamma_fn,
    jacobi_at_one,
    jacobi_deriv_at_one,
    jacobi_p,
    jacobi_p_deriv,
    jacobi_p_sum,
    real_spherical_harmonic,
    sph_harm_gradient_table,
    sph_harm_table,
)

mpmath.mp.dps = 30


def unit_points(k, seed=0):
    p = np.random.default_rng(seed).normal(size=(k, 3))
    return p / np.linalg.norm(p, axis=1, keepdims=True)


# ------------------------------------------------------------------ gamma

def test_gamma_values():
    assert gamma_fn(5) == pytest.approx(24.0, rel=1e-15)
    assert gamma_fn(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-15)
    assert binom_real(2.5, 2) == pytest.approx(2.5 * 1.5 / 2, rel=1e-15)


def test_gamma_poles():
    with pytest.raises(DomainError):
        gamma_fn(0)
    with pytest.raises(DomainError):
        gamma_fn(-3)


# ------------------------------------------------------------------ Bessel

@pytest.mark.parametrize("nu", [0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 7.5, 20.0])
def test_bessel_against_mpmath(nu):
    xs = np.concatenate([np.linspace(0.0, 5, 41), np.linspace(5, 60, 56), [99.5, 250.0, 1234.5, 1e4]])
    got = bessel_j(nu, xs)
    ref = np.array([float(mpmath.besselj(nu, x)) for x in xs])
    assert np.max(np.abs(got - ref)) < 5e-14


def test_bessel_zero_argument():
    assert bessel_j(0.0, 0.0) == 1.0
    assert bessel_j(2.0, 0.0) == 0.0


def test_bessel_first_zero():
    assert abs(bessel_j(0.0, 2.404825557695773)) < 1e-15


@settings(max_examples=60, deadline=None)
@given(st.floats(0.0, 6.0), st.floats(0.1, 80.0))
def test_bessel_recurrence(nu, x):
    # J_{nu-1} + J_{nu+1} = (2 nu / x) J_nu
    lhs = bessel_j(nu + 1.0, x) + bessel_j(nu + 3.0, x)
    rhs = 2 * (nu + 2.0) / x * bessel_j(nu + 2.0, x)
    assert abs(lhs - rhs) < 1e-12 * max(1.0, 1.0 / x)


def test_bessel_rejects_negative_x():
    with pytest.raises(DomainError):
        bessel_j(0.0, -1.0)


# ------------------------------------------------------------------ Jacobi

# the alternating binomial sum loses digits fast, so it is an oracle for small n only
@pytest.mark.parametrize("n,a,b", [(0, 1, 0), (1, 1, 0), (7, 1, 0), (10, 1.5, 0.5), (12, 2, 1)])
def test_jacobi_recurrence_matches_binomial_sum(n, a, b):
    p = JacobiParams(n, a, b)
    for x in np.linspace(-1, 1, 13):
        assert jacobi_p(p, x) == pytest.approx(jacobi_p_sum(p, x), rel=1e-10, abs=1e-10)


@pytest.mark.parametrize("n,a,b", [(5, 1, 0), (40, 1.5, 0.5), (200, 1, 0)])
def test_jacobi_against_mpmath(n, a, b):
    p = JacobiParams(n, a, b)
    for x in (-0.93, -0.2, 0.31, 0.999):
        ref = float(mpmath.jacobi(n, a, b, x))
        assert jacobi_p(p, x) == pytest.approx(ref, rel=1e-11, abs=1e-12 * jacobi_at_one(p))


def test_jacobi_endpoint_values():
    p = JacobiParams(9, 1.0, 0.0)
    assert jacobi_at_one(p) == pytest.approx(10.0)
    assert jacobi_p(p, 1.0) == pytest.approx(10.0, rel=1e-14)
    # P'(1) = (n + a + b + 1)/2 * P_{n-1}^{(a+1,b+1)}(1)
    assert jacobi_deriv_at_one(p) == pytest.approx(jacobi_p_deriv(p, 1.0), rel=1e-12)
    assert jacobi_deriv_at_one(p, 2) == pytest.approx(jacobi_p_deriv(p, 1.0, order=2), rel=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 40), st.floats(0, 3), st.floats(0, 3), st.floats(-1, 1))
def test_jacobi_reflection(n, a, b, x):
    lhs = jacobi_p(JacobiParams(n, a, b), -x)
    rhs = (-1) ** n * jacobi_p(JacobiParams(n, b, a), x)
    assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-9)


def test_jacobi_derivative_finite_difference():
    p = JacobiParams(17, 1.0, 0.0)
    x, h = 0.37, 1e-6
    fd = (jacobi_p(p, x + h) - jacobi_p(p, x - h)) / (2 * h)
    assert jacobi_p_deriv(p, x) == pytest.approx(fd, rel=1e-7)


def test_jacobi_domain():
    with pytest.raises(DomainError):
        jacobi_p(JacobiParams(3, 1, 0), 1.5)
    with pytest.raises(DomainError):
        JacobiParams(-1, 1, 0)


# ------------------------------------------------------------------ harmonics

def test_harmonics_orthonormal_by_quadrature():
    # Gauss-Legendre in cos(theta) x uniform in phi is exact for degree <= 2n
    n = 6
    xg, wg = np.polynomial.legendre.leggauss(n + 2)
    phis = np.linspace(0, 2 * np.pi, 2 * n + 3, endpoint=False)
    ct, ph = np.meshgrid(xg, phis, indexing="ij")
    st_ = np.sqrt(1 - ct**2)
    pts = np.stack([st_ * np.cos(ph), st_ * np.sin(ph), ct], axis=-1).reshape(-1, 3)
    w = (wg[:, None] * np.full_like(ph, 2 * np.pi / len(phis))).ravel()
    y = sph_harm_table(n, pts)
    gram = (y * w[:, None]).T @ y
    assert np.max(np.abs(gram - np.eye((n + 1) ** 2))) < 1e-12


def test_addition_theorem():
    # sum_m Y_lm(x)^2 = (2l + 1)/(4 pi) for each level
    y = sph_harm_table(8, unit_points(20))
    for ell in range(9):
        block = y[:, ell * ell:(ell + 1) ** 2]
        assert np.allclose((block**2).sum(axis=1), (2 * ell + 1) / (4 * np.pi), rtol=1e-13)


def test_low_degree_closed_forms():
    x = unit_points(1, 3)[0]
    c0 = 1 / math.sqrt(4 * math.pi)
    c1 = math.sqrt(3 / (4 * math.pi))
    assert real_spherical_harmonic(HarmonicIndex(0, 0), x) == pytest.approx(c0)
    assert real_spherical_harmonic(HarmonicIndex(1, 0), x) == pytest.approx(c1 * x[2])
    assert real_spherical_harmonic(HarmonicIndex(1, 1), x) == pytest.approx(c1 * x[0])
    assert real_spherical_harmonic(HarmonicIndex(1, -1), x) == pytest.approx(c1 * x[1])


def test_harmonic_index():
    assert HarmonicIndex(3, -2).flat == 9 + 3 - 2
    with pytest.raises(DomainError):
        HarmonicIndex(2, 3)


def test_gradient_matches_finite_differences():
    n, h = 7, 1e-6
    pts = unit_points(5, 11)
    d_theta, d_phi, e_theta, e_phi = sph_harm_gradient_table(n, pts)
    for i, p in enumerate(pts):
        for grad, e in ((d_theta, e_theta), (d_phi, e_phi)):
            plus = np.cos(h) * p + np.sin(h) * e[i]
            minus = np.cos(h) * p - np.sin(h) * e[i]
            fd = (sph_harm_table(n, plus[None]) - sph_harm_table(n, minus[None]))[0] / (2 * h)
            assert np.max(np.abs(fd - grad[i])) < 1e-7


def test_harmonics_reject_non_unit():
    with pytest.raises(DomainError):
        sph_harm_table(2, np.array([[1.0, 1.0, 0.0]]))
