"""Explicit embedding of S^2 by all real harmonics of level <= n.

This path never touches the Jacobi closed forms; it exists as an
independent route to the critical radius.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .specfun import DomainError, _check_unit_points, sph_harm_gradient_table, sph_harm_table


class DegeneratePairError(ValueError):
    """Raised when the two points of a pair coincide."""


@dataclass(frozen=True)
class EmbeddedPoint:
    coords: np.ndarray
    source: np.ndarray
    n: int


def _scale(n: int) -> float:
    # sqrt(s_2 / pi_n^2)
    return math.sqrt(4 * math.pi) / (n + 1)


def embed_points(n: int, points) -> np.ndarray:
    """Rows are i_n(x) for each point; shape (npts, (n+1)^2)."""
    if n < 0:
        raise DomainError("n must be >= 0")
    return _scale(n) * sph_harm_table(n, points)


def embed_point(n: int, x) -> EmbeddedPoint:
    x = np.asarray(x, dtype=float)
    coords = embed_points(n, x[None, :])[0]
    return EmbeddedPoint(coords=coords, source=x.copy(), n=n)


def tangent_frame(n: int, x):
    """Images of an orthonormal frame of T_x S^2 under d i_n.

    Returns two vectors in R^{(n+1)^2}; both have squared norm n(n+2)/4.
    """
    x = np.asarray(x, dtype=float)
    d_theta, d_phi, _, _ = sph_harm_gradient_table(n, x[None, :])
    s = _scale(n)
    return s * d_theta[0], s * d_phi[0]


def tangent_frames(n: int, points):
    d_theta, d_phi, e_theta, e_phi = sph_harm_gradient_table(n, points)
    s = _scale(n)
    return s * d_theta, s * d_phi, e_theta, e_phi


def tk_ratio(n: int, x, y) -> float:
    """||i(x) - i(y)||^2 / (2 ||P_perp (i(x) - i(y))||) with P_perp the
    projection onto the normal space of the image at i(y)."""
    return float(tk_ratio_many(n, np.asarray(x, float)[None, :], np.asarray(y, float)[None, :])[0])


def tk_ratio_many(n: int, xs, ys) -> np.ndarray:
    xs = _check_unit_points(np.atleast_2d(xs))
    ys = _check_unit_points(np.atleast_2d(ys))
    # atan2 keeps resolution at tiny angles, unlike arccos
    ang = np.arctan2(np.linalg.norm(np.cross(xs, ys), axis=1), np.einsum("ij,ij->i", xs, ys))
    if np.any(ang < 1e-9):
        raise DegeneratePairError("tk_ratio needs distinct points (Theta >= 1e-9)")
    ix = embed_points(n, xs)
    iy = embed_points(n, ys)
    t1, t2, _, _ = tangent_frames(n, ys)
    diff = ix - iy
    # Gram-Schmidt on the tangent frame, then strip tangential components
    u1 = t1 / np.linalg.norm(t1, axis=1, keepdims=True)
    t2o = t2 - np.einsum("ij,ij->i", t2, u1)[:, None] * u1
    u2 = t2o / np.linalg.norm(t2o, axis=1, keepdims=True)
    normal = diff - np.einsum("ij,ij->i", diff, u1)[:, None] * u1
    normal = normal - np.einsum("ij,ij->i", normal, u2)[:, None] * u2
    num = np.einsum("ij,ij->i", diff, diff)
    return num / (2.0 * np.linalg.norm(normal, axis=1))


def rotation_to(v) -> np.ndarray:
    """Some rotation matrix R with R @ e_z = v."""
    v = np.asarray(v, dtype=float)
    z = np.array([0.0, 0.0, 1.0])
    c = float(v @ z)
    if c > 1 - 1e-15:
        return np.eye(3)
    if c < -1 + 1e-15:
        return np.diag([1.0, -1.0, -1.0])
    axis = np.cross(z, v)
    s = np.linalg.norm(axis)
    k = axis / s
    kx = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + s * kx + (1 - c) * kx @ kx


def pairs_at_angle(theta, base_points, phases) -> tuple[np.ndarray, np.ndarray]:
    """Pairs (x, y) with y = base point and x at geodesic distance theta from y
    in direction ``phase`` of the local tangent plane."""
    theta = np.asarray(theta, dtype=float)
    ys, xs = [], []
    for y, ph in zip(base_points, phases):
        r = rotation_to(y)
        local = np.stack([np.sin(theta) * np.cos(ph), np.sin(theta) * np.sin(ph), np.cos(theta)], axis=-1)
        xs.append(local @ r.T)
        ys.append(np.broadcast_to(y, local.shape))
    return np.concatenate(xs), np.concatenate(ys)


def brute_force_critical_radius(n: int, rng: np.random.Generator, ntheta: int = 4000,
                                nbase: int = 4, tol: float = 1e-10) -> tuple[float, float]:
    """Minimise the projection ratio over pairs using only the explicit basis.

    For a few random base points and directions, the ratio is scanned along a
    great circle on a uniform grid in the separation angle and the best grid
    cell is refined by golden-section search. Returns (min, argmin angle).
    """
    bases = rng.normal(size=(nbase, 3))
    bases /= np.linalg.norm(bases, axis=1, keepdims=True)
    phases = rng.uniform(0, 2 * np.pi, nbase)
    thetas = np.linspace(np.pi / ntheta, np.pi, ntheta)
    best = (math.inf, math.nan)
    for y, ph in zip(bases, phases):
        def ratio(t, y=y, ph=ph):
            xs, ys = pairs_at_angle(np.atleast_1d(t), [y], [ph])
            return tk_ratio_many(n, xs, ys)
        vals = ratio(thetas)
        i = int(np.argmin(vals))
        lo = thetas[max(i - 1, 0)]
        hi = thetas[min(i + 1, ntheta - 1)]
        a, b = _golden(lambda t: float(ratio(t)[0]), lo, hi, tol)
        t_star = 0.5 * (a + b)
        cand = min((float(ratio(t_star)[0]), t_star), (float(vals[i]), thetas[i]))
        best = min(best, cand)
    return best


def _golden(fn, lo: float, hi: float, tol: float):
    g = (math.sqrt(5) - 1) / 2
    c = hi - g * (hi - lo)
    d = lo + g * (hi - lo)
    fc, fd = fn(c), fn(d)
    while hi - lo > tol:
        if fc <= fd:
            hi, d, fd = d, c, fc
            c = hi - g * (hi - lo)
            fc = fn(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + g * (hi - lo)
            fd = fn(d)
    return lo, hi
