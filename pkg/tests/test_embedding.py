import numpy as np
import pytest

from sphreach.embedding import (
    DegeneratePairError,
    brute_force_critical_radius,
    embed_point,
    embed_points,
    pairs_at_angle,
    rotation_to,
    tangent_frame,
    tk_ratio,
    tk_ratio_many,
)
from sphreach.kernel import KernelSpec, metric_scale, normalized_kernel
from sphreach.reach import reach_functional


def unit(k, seed):
    p = np.random.default_rng(seed).normal(size=(k, 3))
    return p / np.linalg.norm(p, axis=1, keepdims=True)


@pytest.mark.parametrize("n", [0, 1, 5, 20])
def test_image_on_unit_sphere(n):
    assert np.allclose(np.linalg.norm(embed_points(n, unit(30, n)), axis=1), 1.0, atol=1e-13)


def test_inner_product_is_normalized_kernel():
    n = 9
    x, y = unit(2, 4)
    got = embed_point(n, x).coords @ embed_point(n, y).coords
    assert got == pytest.approx(normalized_kernel(KernelSpec(n, 2), x @ y), abs=1e-13)


@pytest.mark.parametrize("n", [1, 2, 7, 20])
def test_tangent_frame_is_conformal(n):
    x = unit(1, 10 + n)[0]
    t1, t2 = tangent_frame(n, x)
    m = metric_scale(n, 2)
    assert t1 @ t1 == pytest.approx(m, rel=1e-11)
    assert t2 @ t2 == pytest.approx(m, rel=1e-11)
    assert abs(t1 @ t2) < 1e-10 * m
    # tangent vectors are orthogonal to the position on the unit sphere
    assert abs(t1 @ embed_point(n, x).coords) < 1e-11


def test_rotation_to():
    for v in unit(5, 2):
        r = rotation_to(v)
        assert np.allclose(r @ [0, 0, 1], v, atol=1e-14)
        assert np.allclose(r.T @ r, np.eye(3), atol=1e-14)
    assert np.allclose(rotation_to(np.array([0, 0, -1.0])) @ [0, 0, 1], [0, 0, -1])


@pytest.mark.parametrize("n", [2, 5, 11])
def test_projection_ratio_equals_functional(n):
    thetas = np.array([0.05, 0.4, 1.3, 2.2, 3.0])
    xs, ys = pairs_at_angle(thetas, unit(2, n), [0.3, 2.0])
    got = tk_ratio_many(n, xs, ys)
    ref = np.tile(reach_functional(n, 2, thetas), 2)
    assert np.allclose(got, ref, rtol=1e-8)


def test_degenerate_pair():
    x = unit(1, 0)[0]
    with pytest.raises(DegeneratePairError):
        tk_ratio(3, x, x)


def test_brute_force_small_n():
    val, arg = brute_force_critical_radius(1, np.random.default_rng(0), ntheta=400)
    # explicit coordinates lose ~eps/theta^2 at the smallest grid angle
    assert val == pytest.approx(np.sqrt(3) / 2, abs=1e-9)
