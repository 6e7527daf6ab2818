import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sphreach.kernel import (
    KernelSpec,
    eigenspace_dim,
    kernel_by_basis_sum,
    kernel_closed_form,
    metric_scale,
    normalized_kernel,
    total_dim,
)
from sphreach.specfun import DomainError, jacobi_deriv_at_one


def test_dimensions_d2():
    for n in range(12):
        assert total_dim(n, 2) == (n + 1) ** 2
        assert eigenspace_dim(n, 2) == 2 * n + 1


def test_dimensions_d3():
    # k_l^3 = (l+1)^2 and pi_n^3 = (n+1)(n+2)(2n+3)/6
    for n in range(12):
        assert eigenspace_dim(n, 3) == (n + 1) ** 2
        assert total_dim(n, 3) == (n + 1) * (n + 2) * (2 * n + 3) // 6


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 60), st.integers(2, 9))
def test_total_is_sum_of_levels(n, d):
    assert total_dim(n, d) == sum(eigenspace_dim(ell, d) for ell in range(n + 1))


def test_invalid_dimensions():
    with pytest.raises(DomainError):
        total_dim(3, 1)
    with pytest.raises(DomainError):
        KernelSpec(-1, 2)


@pytest.mark.parametrize("n,d", [(1, 2), (5, 2), (40, 3), (7, 4)])
def test_normalized_kernel_at_one_and_metric(n, d):
    spec = KernelSpec(n, d)
    assert normalized_kernel(spec, 1.0) == pytest.approx(1.0, rel=1e-13)
    # the metric scale is Pi'(1)
    assert jacobi_deriv_at_one(spec.jacobi) / spec.norm_const == pytest.approx(metric_scale(n, d), rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 50), st.integers(2, 5), st.floats(-1, 1))
def test_normalized_kernel_bounded(n, d, c):
    assert abs(normalized_kernel(KernelSpec(n, d), c)) <= 1 + 1e-12


def test_basis_sum_matches_closed_form():
    rng = np.random.default_rng(1)
    for n in (0, 1, 4, 13):
        for _ in range(5):
            x, y = rng.normal(size=(2, 3))
            x, y = x / np.linalg.norm(x), y / np.linalg.norm(y)
            assert kernel_by_basis_sum(n, x, y) == pytest.approx(kernel_closed_form(n, x, y), abs=1e-12)


def test_kernel_diagonal():
    x = np.array([0.0, 0.6, 0.8])
    assert kernel_by_basis_sum(9, x, x) == pytest.approx(100 / (4 * math.pi), rel=1e-13)
