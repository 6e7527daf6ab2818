"""Random spherical harmonics on S^2 under the spherical ensemble.

The field is Phi(x) = sum a_lm Y_lm(x) = sqrt(pi_n/s_2) <a, i_n(x)>, with the
coefficient vector a uniform on the unit sphere of R^{(n+1)^2}. Its supremum
is bracketed rigorously: every grid value is a lower bound, and each cell of
a covering by geodesic caps carries an upper bound from the derivative
bounds of the embedding.

Bias direction of the Monte Carlo estimates: counting samples whose certified
lower value exceeds u underestimates P{sup > u}; counting samples whose
certified upper bound exceeds u overestimates it. Refinement is spent only on
samples whose classification is still ambiguous, so the two counts usually
coincide.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.spatial import ConvexHull

from .kernel import KernelSpec, total_dim
from .specfun import DomainError, _check_unit_points, jacobi_deriv_at_one, sph_harm_table

THREADS_ENV = "SPHREACH_THREADS"
CHUNK = 10_000


@dataclass(frozen=True)
class EnsembleSample:
    n: int
    coeffs: np.ndarray
    seed: int
    ensemble: str = "spherical"

    def __post_init__(self):
        if self.coeffs.shape != ((self.n + 1) ** 2,):
            raise DomainError(f"expected {(self.n + 1) ** 2} coefficients, got {self.coeffs.shape}")
        self.coeffs.setflags(write=False)


@dataclass(frozen=True)
class GridConfig:
    """Base Fibonacci grid size and the number of refinement rounds.

    Refinement works on the triangles of the lattice's convex hull; each
    round splits a surviving triangle into four, halving its radius.
    """

    base_points: int = 2000
    depth: int = 24
    max_cells: int = 20_000  # per sample; beyond this a sample keeps its cells unrefined

    def __post_init__(self):
        if self.base_points < 12:
            raise DomainError("base grid needs at least 12 points")
        if self.depth < 0:
            raise DomainError("depth must be >= 0")


@dataclass(frozen=True)
class SupEstimate:
    value: float
    argmax: np.ndarray
    grid_points: int
    refinement_radius: float
    upper_bound: float


@dataclass(frozen=True)
class MCEstimate:
    """Exceedence counts for one level. ``lower`` counts certified
    exceedences; ``upper`` adds the samples that could not be ruled out."""

    u: float
    trials: int
    lower: float
    upper: float
    seed: int

    @property
    def estimate(self) -> float:
        return self.lower

    @property
    def std_error(self) -> float:
        p = max(self.lower, self.upper, key=lambda q: q * (1 - q))
        return math.sqrt(p * (1 - p) / self.trials)

    def score_error(self, p: float) -> float:
        """Binomial standard error at a hypothesised probability p."""
        return math.sqrt(p * (1 - p) / self.trials)

    def brackets(self, p: float, z: float = 3.0) -> bool:
        """Whether p lies in [lower, upper] widened by z standard errors.

        The error is taken at p itself (score form), which stays meaningful
        when no exceedence was observed and the plug-in error is zero.
        """
        se = self.score_error(p)
        return self.lower - z * se <= p <= self.upper + z * se


# ---------------------------------------------------------------- sampling

def _rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed & (2**64 - 1), chunk])))


def _normals(n: int, seed: int, chunk: int, size: int) -> np.ndarray:
    return _rng(seed, chunk).standard_normal((size, (n + 1) ** 2))


def sample_spherical_ensemble(n: int, seed: int) -> EnsembleSample:
    """Normalised independent standard normals; deterministic in ``seed``."""
    if n < 0:
        raise DomainError("n must be >= 0")
    a = _normals(n, seed, 0, 1)[0]
    return EnsembleSample(n=n, coeffs=a / np.linalg.norm(a), seed=seed)


def sample_gaussian_ensemble(n: int, seed: int) -> EnsembleSample:
    """Experimental: unnormalised coefficients, no exact comparison target."""
    if n < 0:
        raise DomainError("n must be >= 0")
    return EnsembleSample(n=n, coeffs=_normals(n, seed, 0, 1)[0], seed=seed, ensemble="gaussian")


def ensemble_batch(n: int, seed: int, chunk: int, size: int) -> np.ndarray:
    """Rows are unit coefficient vectors; chunk ``c`` of a run uses its own stream."""
    a = _normals(n, seed, chunk, size)
    return a / np.linalg.norm(a, axis=1, keepdims=True)


# ---------------------------------------------------------------- field

def field_scale(n: int) -> float:
    """sqrt(pi_n^2 / s_2) = (n+1)/sqrt(4 pi)."""
    return (n + 1) / math.sqrt(4 * math.pi)


def evaluate_field(sample: EnsembleSample, x):
    """Phi(x) by direct summation over the real basis."""
    pts = _check_unit_points(np.atleast_2d(np.asarray(x, dtype=float)))
    vals = sph_harm_table(sample.n, pts) @ sample.coeffs
    return float(vals[0]) if np.ndim(x) == 1 else vals


@lru_cache(maxsize=32)
def derivative_bounds(n: int) -> tuple[float, float]:
    """(L, H) for a unit coefficient vector: bounds on the first and second
    derivatives of Phi along unit-speed geodesics.

    L^2 = (pi_n/s_2) G''(0) magnitude = (pi_n/s_2) m and
    H^2 = (pi_n/s_2) G''''(0), where G(t) = Pi(cos t) and
    G''''(0) = Pi'(1) + 3 Pi''(1).
    """
    spec = KernelSpec(n, 2)
    p1 = jacobi_deriv_at_one(spec.jacobi, 1) / spec.norm_const
    p2 = jacobi_deriv_at_one(spec.jacobi, 2) / spec.norm_const if n >= 2 else 0.0
    s = field_scale(n)
    return s * math.sqrt(spec.metric_scale), s * math.sqrt(p1 + 3 * p2)


def cell_slack(n: int, r: float) -> float:
    """Bound on sup over a cap of radius r minus the centre value, valid for
    the cap that holds the global maximiser: min(L r, H r^2 / 2)."""
    lip, hess = derivative_bounds(n)
    return min(lip * r, 0.5 * hess * r * r)


# ---------------------------------------------------------------- grids

def fibonacci_lattice(npts: int) -> np.ndarray:
    i = np.arange(npts) + 0.5
    z = 1.0 - 2.0 * i / npts
    r = np.sqrt(1.0 - z * z)
    phi = math.pi * (3.0 - math.sqrt(5.0)) * np.arange(npts)
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def covering_radius(points) -> float:
    """Exact geodesic covering radius of a point set on S^2.

    Voronoi vertices are the outward normals of the convex-hull facets, so
    the covering radius is the largest angle between a facet normal and the
    facet's vertices.
    """
    pts = np.asarray(points, dtype=float)
    hull = ConvexHull(pts)
    normals = hull.equations[:, :3]
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)
    cosines = np.einsum("fj,fj->f", normals, pts[hull.simplices[:, 0]])
    return float(np.arccos(np.clip(cosines.min(), -1.0, 1.0)))


@lru_cache(maxsize=8)
def _base_grid(npts: int):
    pts = fibonacci_lattice(npts)
    # small margin for the arccos rounding
    return pts, covering_radius(pts) * (1 + 1e-9) + 1e-12


@lru_cache(maxsize=8)
def _base_table(n: int, npts: int) -> np.ndarray:
    pts, _ = _base_grid(npts)
    return np.ascontiguousarray(sph_harm_table(n, pts).T)


_BLOCK = 100_000


@lru_cache(maxsize=8)
def _base_triangles(npts: int) -> np.ndarray:
    """Spherical triangles of the lattice (convex-hull facets); shape (T, 3, 3)."""
    pts, _ = _base_grid(npts)
    return pts[ConvexHull(pts).simplices]


def _cell_geometry(tri: np.ndarray):
    """Centroid direction and the largest angle from it to a vertex.

    Distance to a point is convex on small caps, so the whole triangle lies
    within that angle of the centroid.
    """
    c = tri.sum(axis=1)
    c /= np.linalg.norm(c, axis=1, keepdims=True)
    cross = np.linalg.norm(np.cross(c[:, None, :], tri), axis=2)
    dots = np.einsum("tj,tvj->tv", c, tri)
    rho = np.arctan2(cross, dots).max(axis=1)
    return c, rho * (1 + 1e-9) + 1e-15


def _subdivide(tri: np.ndarray) -> np.ndarray:
    """Split each triangle in four at the normalised edge midpoints; the
    children tile the parent."""
    a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]

    def mid(p, q):
        m = p + q
        return m / np.linalg.norm(m, axis=1, keepdims=True)

    ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
    kids = np.stack([
        np.stack([a, ab, ca], axis=1),
        np.stack([ab, b, bc], axis=1),
        np.stack([ca, bc, c], axis=1),
        np.stack([ab, bc, ca], axis=1),
    ], axis=1)
    return kids.reshape(-1, 3, 3)


def _row_values(n: int, coeffs: np.ndarray, owner: np.ndarray, pts: np.ndarray) -> np.ndarray:
    if len(pts) == 0:
        return np.empty(0)
    return np.concatenate([
        np.einsum("ij,ij->i", sph_harm_table(n, pts[i:i + _BLOCK]), coeffs[owner[i:i + _BLOCK]])
        for i in range(0, len(pts), _BLOCK)
    ])


# ---------------------------------------------------------------- branch and bound

def _branch_and_bound(n: int, coeffs: np.ndarray, levels, config: GridConfig):
    """Refine the lattice triangulation for each row of ``coeffs``.

    With ``levels`` None the target is the supremum itself; otherwise the
    goal is only to decide sup > level per row, and rows are dropped once a
    value above the level is found. Returns best values, their locations,
    certified upper bounds and the largest radius among the final cells.

    A triangle is discarded when its centroid value plus slack cannot beat
    the current threshold. The maximiser lies in some surviving triangle, so
    the upper bound is the larger of the best value and the survivors' bounds.
    """
    nrows = coeffs.shape[0]
    pts, _ = _base_grid(config.base_points)
    vals = coeffs @ _base_table(n, config.base_points)
    idx = np.argmax(vals, axis=1)
    best = vals[np.arange(nrows), idx]
    where = pts[idx].copy()
    live = np.ones(nrows, dtype=bool) if levels is None else best <= levels

    base = _base_triangles(config.base_points)
    centers, radii = _cell_geometry(base)
    owner = np.repeat(np.flatnonzero(live), len(base))
    tri = np.tile(base, (int(live.sum()), 1, 1))
    centers, radii = np.tile(centers, (int(live.sum()), 1)), np.tile(radii, int(live.sum()))
    frozen_owner, frozen_bound = [], []
    r_last = float(radii.max()) if radii.size else 0.0
    for level in range(config.depth + 1):
        if owner.size == 0:
            break
        cv = _row_values(n, coeffs, owner, centers)
        top = np.full(nrows, -np.inf)
        np.maximum.at(top, owner, cv)
        better = top > best
        if better.any():
            hit = better[owner] & (cv == top[owner])
            where[owner[hit]] = centers[hit]
            best = np.where(better, top, best)
        if levels is None:
            thr = best
        else:
            live &= best <= levels
            thr = levels
        slack = _slack_many(n, radii)
        ok = (cv + slack > thr[owner]) & live[owner]
        owner, tri, cv, slack, radii = owner[ok], tri[ok], cv[ok], slack[ok], radii[ok]
        if owner.size:
            r_last = float(radii.max())
        heavy = np.bincount(owner, minlength=nrows) * 4 > config.max_cells
        if level == config.depth or heavy.any():
            f = heavy[owner] if level < config.depth else np.ones(owner.size, dtype=bool)
            frozen_owner.append(owner[f])
            frozen_bound.append(cv[f] + slack[f])
            owner, tri = owner[~f], tri[~f]
            live &= ~heavy
        if owner.size == 0:
            break
        tri = _subdivide(tri)
        owner = np.repeat(owner, 4)
        centers, radii = _cell_geometry(tri)
    upper = best.copy()
    for o, b in zip(frozen_owner, frozen_bound):
        np.maximum.at(upper, o, b)
    return best, where, upper, r_last


def _slack_many(n: int, r: np.ndarray) -> np.ndarray:
    lip, hess = derivative_bounds(n)
    return np.minimum(lip * r, 0.5 * hess * r * r)


def sup_field(sample: EnsembleSample, grid_config: GridConfig = GridConfig()) -> SupEstimate:
    """Grid maximum refined by branch and bound, with a certified upper bound."""
    norm = float(np.linalg.norm(sample.coeffs))
    if norm == 0:
        return SupEstimate(0.0, np.array([0.0, 0.0, 1.0]), grid_config.base_points, 0.0, 0.0)
    a = (sample.coeffs / norm)[None, :]
    best, where, upper, r = _branch_and_bound(sample.n, a, None, grid_config)
    cap = field_scale(sample.n)
    value = float(best[0]) * norm
    bound = min(float(upper[0]), cap) * norm
    return SupEstimate(value=value, argmax=where[0].copy(), grid_points=grid_config.base_points,
                       refinement_radius=r, upper_bound=max(bound, value))


def sup_by_distance(sample: EnsembleSample, points) -> float:
    """sqrt(pi_n/s_2) cos(dist(a, i_n(S^2))), evaluated over ``points``: the
    angle from the unit coefficient vector to each image point."""
    from .embedding import embed_points

    a = sample.coeffs / np.linalg.norm(sample.coeffs)
    cosines = embed_points(sample.n, points) @ a
    ang = np.arccos(np.clip(cosines, -1.0, 1.0))
    return field_scale(sample.n) * float(np.cos(ang.min()))


# ---------------------------------------------------------------- Monte Carlo

def _threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _classify_chunk(n: int, levels: np.ndarray, seed: int, chunk: int, size: int, config: GridConfig):
    a = ensemble_batch(n, seed, chunk, size)
    lo = np.zeros(len(levels), dtype=np.int64)
    hi = np.zeros(len(levels), dtype=np.int64)
    vals = a @ _base_table(n, config.base_points)
    grid_max = vals.max(axis=1)
    _, r0 = _base_grid(config.base_points)
    s0 = cell_slack(n, r0)
    for k, u in enumerate(levels):
        above = grid_max > u
        ambiguous = ~above & (grid_max + s0 > u)
        lo[k] = above.sum()
        hi[k] = lo[k]
        if ambiguous.any():
            sub = a[ambiguous]
            best, _, upper, _ = _branch_and_bound(n, sub, np.full(len(sub), u), config)
            lo[k] += int((best > u).sum())
            hi[k] += int((upper > u).sum())
    return lo, hi


def mc_exceedence_levels(n: int, levels, trials: int, seed: int,
                         grid_config: GridConfig = GridConfig()) -> list[MCEstimate]:
    """One batch of samples classified against every level.

    Chunks of CHUNK samples draw from independent Philox streams keyed by
    (seed, chunk index) and are merged in chunk order, so the result does not
    depend on the thread count.
    """
    if trials < 10_000:
        raise DomainError("trials must be >= 10^4")
    levels = np.asarray(levels, dtype=float)
    sizes = [min(CHUNK, trials - c * CHUNK) for c in range(-(-trials // CHUNK))]
    work = [(n, levels, seed, c, s, grid_config) for c, s in enumerate(sizes)]
    if _threads() > 1:
        with ThreadPoolExecutor(_threads()) as pool:
            parts = list(pool.map(lambda w: _classify_chunk(*w), work))
    else:
        parts = [_classify_chunk(*w) for w in work]
    lo = sum(p[0] for p in parts)
    hi = sum(p[1] for p in parts)
    return [MCEstimate(u=float(u), trials=trials, lower=float(lo[k]) / trials, upper=float(hi[k]) / trials,
                       seed=seed) for k, u in enumerate(levels)]


def mc_exceedence(n: int, u: float, trials: int, seed: int, grid_config: GridConfig = GridConfig()) -> MCEstimate:
    return mc_exceedence_levels(n, [u], trials, seed, grid_config)[0]


def levels_from_v(n: int, vs) -> np.ndarray:
    return np.asarray(vs, dtype=float) * field_scale(n)


def total_coefficients(n: int) -> int:
    return total_dim(n, 2)
