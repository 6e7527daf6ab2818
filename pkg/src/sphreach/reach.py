"""Critical radius of the mixed-degree embedding as a function of the angle,
its global minimum, and the rescaled limit functions.

With G(theta) = Pi_n^d(cos theta) and m = n(n+d)/(d+2) the functional is

    r(theta) = (1 - G) / sqrt(2 - 2G - G'(theta)^2 / m).

Numerator and radicand both vanish at theta = 0 (like theta^2 and
theta^4), so near the origin we work with the terminating hypergeometric
expansion of G in z = sin^2(theta/2) and cancel the leading orders
coefficient-wise instead of numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .kernel import KernelSpec
from .specfun import DomainError, bessel_j, jacobi_p, jacobi_p_deriv

SQRT_HALF = 1.0 / math.sqrt(2.0)
RADICAND_TOL = 1e-12
SERIES_SWITCH = 2.0  # use the z-series while n * theta <= SERIES_SWITCH
_SERIES_TERMS = 40


class NumericalInstabilityError(ArithmeticError):
    """Radicand of the critical-radius functional is negative beyond roundoff."""


@dataclass(frozen=True)
class SubintervalConfig:
    c: float = 1.0
    c_prime: float = 1.0
    epsilon: float = 0.1
    mid_exponent: float = 0.8

    def __post_init__(self):
        if min(self.c, self.c_prime, self.epsilon) <= 0:
            raise DomainError("c, c', epsilon must be positive")
        if not 0 < self.mid_exponent < 1:
            raise DomainError("mid_exponent must lie in (0, 1)")

    def cuts(self, n: int) -> tuple[float, float, float]:
        return self.c / n, n ** (-self.mid_exponent), math.pi - self.c_prime / n


@dataclass(frozen=True)
class ReachProfile:
    n: int
    d: int
    theta_grid: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    partial_infima: tuple[float, float, float, float]
    global_min: float
    argmin: float
    cuts: tuple[float, float, float]

    def summary(self) -> dict:
        return {
            "n": self.n,
            "d": self.d,
            "cuts": list(self.cuts),
            "partial_infima": {k: v for k, v in zip(("I", "II", "III", "IV"), self.partial_infima)},
            "global_min": self.global_min,
            "argmin": self.argmin,
            "grid_points": int(self.theta_grid.size),
        }


# ---------------------------------------------------------------------------
# finite n


def _kernel_terms(spec: KernelSpec, z: np.ndarray, nterms: int) -> np.ndarray:
    """u_j = h_j z^j, the terms of G = 2F1(-n, n+a+b+1; a+1; z) = sum_j h_j z^j."""
    a, b = spec.jacobi.alpha, spec.jacobi.beta
    n = spec.n
    u = np.zeros((nterms + 1, z.size))
    u[0] = 1.0
    for j in range(nterms):
        u[j + 1] = u[j] * z * ((j - n) * (j + n + a + b + 1.0) / ((j + 1.0) * (j + a + 1.0)))
    return u


def _series_parts(spec: KernelSpec, theta: np.ndarray):
    """Numerator 1 - G and radicand via the z-series, leading orders cancelled."""
    z = np.sin(0.5 * theta) ** 2
    k_max = min(spec.n, _SERIES_TERMS)
    u = _kernel_terms(spec, z, k_max)
    m = spec.metric_scale
    idx = np.arange(k_max + 1, dtype=float)
    w = idx[:, None] * u  # j * u_j
    numer = -u[1:].sum(axis=0)
    rad = np.zeros_like(z)
    # E_1 vanishes identically (m = -h_1/2); start at k = 2. The products
    # reach order 2 k_max, past the last term of G.
    for k in range(2, 2 * k_max + 1):
        hi = sum(w[i] * w[k + 1 - i] for i in range(max(1, k + 1 - k_max), min(k, k_max) + 1))
        lo = sum(w[i] * w[k - i] for i in range(max(1, k - k_max), min(k - 1, k_max) + 1))
        lin = -2.0 * u[k] if k <= k_max else 0.0
        rad += lin - (hi / z - lo) / m
    return numer, rad


def _direct_parts(spec: KernelSpec, theta: np.ndarray):
    c = np.cos(theta)
    g = jacobi_p(spec.jacobi, c) / spec.norm_const
    dg = -jacobi_p_deriv(spec.jacobi, c) * np.sin(theta) / spec.norm_const
    numer = 1.0 - g
    rad = 2.0 * numer - dg * dg / spec.metric_scale
    return numer, rad


def _ratio(numer: np.ndarray, rad: np.ndarray) -> np.ndarray:
    if np.any(rad < -RADICAND_TOL):
        worst = float(rad.min())
        raise NumericalInstabilityError(f"radicand {worst:.3e} below -{RADICAND_TOL:g}")
    rad = np.where(rad < 0, 0.0, rad)
    with np.errstate(divide="ignore"):
        return numer / np.sqrt(rad)


def reach_functional(n: int, d: int, theta):
    """Critical-radius functional r(theta) on (0, pi]; vectorised over theta."""
    if n < 1:
        raise DomainError("reach_functional needs n >= 1")
    th = np.asarray(theta, dtype=float)
    if np.any(th <= 0) or np.any(th > math.pi) or np.any(np.isnan(th)):
        raise DomainError("theta must lie in (0, pi]")
    spec = KernelSpec(n, d)
    flat = np.atleast_1d(th).ravel()
    out = np.empty_like(flat)
    near = n * flat <= SERIES_SWITCH
    if np.any(near):
        out[near] = _ratio(*_series_parts(spec, flat[near]))
    if np.any(~near):
        out[~near] = _ratio(*_direct_parts(spec, flat[~near]))
    return float(out[0]) if th.ndim == 0 else out.reshape(th.shape)


def reach_limit_at_zero(n: int, d: int) -> float:
    """theta -> 0+ limit of r(theta): -h_1 / sqrt(6 h_2 - 2 h_1)."""
    spec = KernelSpec(n, d)
    a, b = spec.jacobi.alpha, spec.jacobi.beta
    h1 = -n * (n + a + b + 1.0) / (a + 1.0)
    h2 = h1 * (1.0 - n) * (n + a + b + 2.0) / (2.0 * (a + 2.0))
    return -h1 / math.sqrt(6.0 * h2 - 2.0 * h1)


def _golden_many(fn, lo: np.ndarray, hi: np.ndarray, tol: float, max_iter: int = 200):
    g = (math.sqrt(5.0) - 1.0) / 2.0
    lo = lo.astype(float).copy()
    hi = hi.astype(float).copy()
    c = hi - g * (hi - lo)
    d = lo + g * (hi - lo)
    fc, fd = fn(c), fn(d)
    for _ in range(max_iter):
        if np.all(hi - lo <= tol):
            break
        left = fc <= fd
        # keep [lo, d] where f(c) <= f(d), else [c, hi]
        new_hi = np.where(left, d, hi)
        new_lo = np.where(left, lo, c)
        new_c = np.where(left, new_hi - g * (new_hi - new_lo), d)
        new_d = np.where(left, c, new_lo + g * (new_hi - new_lo))
        lo, hi = new_lo, new_hi
        fresh = np.where(left, new_c, new_d)
        f_fresh = fn(fresh)
        fc, fd = np.where(left, f_fresh, fd), np.where(left, fc, f_fresh)
        c, d = new_c, new_d
    x = 0.5 * (lo + hi)
    return x, fn(x)


def theta_grid(n: int, config: SubintervalConfig = SubintervalConfig(), linear_points: int = 100_000,
               log_points: int = 20_000) -> np.ndarray:
    """Hybrid grid: log-spaced on (0, 1/n], linear on [1/n, pi], cut points included."""
    lin = max(linear_points, 64 * n)
    log_part = np.geomspace(1e-4 / n, 1.0 / n, log_points)
    lin_part = np.linspace(1.0 / n, math.pi, lin)
    cuts = [t for t in config.cuts(n) if 0 < t <= math.pi]
    return np.unique(np.concatenate([log_part, lin_part, cuts]))


def critical_radius(n: int, d: int, config: SubintervalConfig = SubintervalConfig(),
                    linear_points: int = 100_000, refine_basins: int = 8,
                    tol: float = 1e-9) -> ReachProfile:
    """Global infimum of r over (0, pi] plus the four partial infima.

    The best ``refine_basins`` local minima of the grid are polished by a
    (vectorised) golden-section search to ``tol`` in theta. The theta -> 0
    limit is included as a candidate.
    """
    grid = theta_grid(n, config, linear_points)
    vals = reach_functional(n, d, grid)

    interior = np.flatnonzero((vals[1:-1] <= vals[:-2]) & (vals[1:-1] <= vals[2:])) + 1
    order = interior[np.argsort(vals[interior], kind="stable")][:refine_basins]
    cand_t = [grid[0], grid[-1]]
    cand_v = [reach_limit_at_zero(n, d), float(vals[-1])]
    if vals[-2] < vals[-1]:
        order = np.append(order, len(grid) - 1)
    if order.size:
        lo = grid[np.maximum(order - 1, 0)]
        hi = grid[np.minimum(order + 1, len(grid) - 1)]
        t_ref, v_ref = _golden_many(lambda t: reach_functional(n, d, t), lo, hi, tol)
        cand_t.extend(t_ref.tolist())
        cand_v.extend(np.asarray(v_ref).tolist())
    # theta -> 0 limit reported at the smallest grid angle
    cand_t[0] = 0.0
    all_t = np.concatenate([grid, cand_t])
    all_v = np.concatenate([vals, cand_v])
    k = int(np.argmin(all_v))  # first occurrence: deterministic tie-break

    cuts = config.cuts(n)
    edges = [0.0, *cuts, math.pi]
    partial = []
    for lo_e, hi_e in zip(edges[:-1], edges[1:]):
        mask = (all_t >= lo_e) & (all_t <= hi_e)
        partial.append(float(all_v[mask].min()) if lo_e < hi_e and np.any(mask) else math.inf)
    return ReachProfile(
        n=n, d=d, theta_grid=grid, values=vals, partial_infima=tuple(partial),
        global_min=float(all_v[k]), argmin=float(all_t[k]), cuts=cuts,
    )


# ---------------------------------------------------------------------------
# limit functions


def _phi_coeffs(nu: float, nterms: int) -> np.ndarray:
    """Taylor coefficients in s = x^2 of Gamma(nu+1) (x/2)^-nu J_nu(x)."""
    a = np.empty(nterms + 1)
    a[0] = 1.0
    for k in range(1, nterms + 1):
        a[k] = a[k - 1] * (-0.25) / (k * (nu + k))
    return a


def _series_ratio(a: np.ndarray, kappa: float, x: np.ndarray) -> np.ndarray:
    """(1 - phi)/sqrt(2 - 2 phi - kappa phi'^2) for phi = sum a_k s^k, s = x^2,
    assuming the s^1 coefficient of the radicand vanishes."""
    s = x * x
    nt = a.size - 1
    b = np.arange(nt + 1) * a  # b_k: coefficient of s^(k-1) in d phi/ds
    numer = np.zeros_like(s)  # (1 - phi)/s
    rad = np.zeros_like(s)    # radicand / s^2
    power = np.ones_like(s)      # s^(k-1), numerator
    rad_power = np.ones_like(s)  # s^(k-2), radicand
    for k in range(1, nt + 1):
        numer -= a[k] * power
        if k >= 2:
            conv = sum(b[i] * b[k + 1 - i] for i in range(1, k + 1) if k + 1 - i <= nt)
            rad += (-2.0 * a[k] - 4.0 * kappa * conv) * rad_power
            rad_power = rad_power * s
        power = power * s
    return numer / np.sqrt(rad)


_LIMIT_SERIES_X = 4.0


def _as_array(x):
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise DomainError("limit functions need x >= 0")
    return arr, np.atleast_1d(arr).ravel()


def limit_function_f(x, d: int = 2):
    """Rescaled limit of r(x/n) as n -> infinity.

    With phi(x) = Gamma(d/2+1) (x/2)^{-d/2} J_{d/2}(x),

        F_d(x) = (1 - phi) / sqrt(2 - 2 phi - (d+2) phi'^2).

    For d = 2 this is (1 - 2J_1/x) / sqrt(2 - 4J_1/x - 4((2J_1/x)')^2).
    """
    arr, xs = _as_array(x)
    nu = d / 2.0
    out = np.empty_like(xs)
    small = xs <= _LIMIT_SERIES_X
    if np.any(small):
        out[small] = _series_ratio(_phi_coeffs(nu, 40), d + 2.0, xs[small])
    big = ~small
    if np.any(big):
        xb = xs[big]
        pref = math.gamma(nu + 1.0) * (2.0 / xb) ** nu
        phi = pref * bessel_j(nu, xb)
        dphi = -pref * bessel_j(nu + 1.0, xb)
        out[big] = (1.0 - phi) / np.sqrt(2.0 - 2.0 * phi - (d + 2.0) * dphi * dphi)
    return float(out[0]) if arr.ndim == 0 else out.reshape(arr.shape)


def limit_function_f_printed(x, d: int):
    """The general-d limit exactly as printed, without the Gamma(d/2+1) normalisation:

        (1 - psi) / sqrt(2 - psi - 2 Gamma(d/2+2) psi'^2),  psi = (x/2)^{-d/2} J_{d/2}(x).

    Kept for comparison only; it does not reduce to :func:`limit_function_f` at d = 2.
    """
    arr, xs = _as_array(x)
    nu = d / 2.0
    xs = np.maximum(xs, 1e-8)
    pref = (xs / 2.0) ** (-nu)
    psi = pref * bessel_j(nu, xs)
    dpsi = -pref * bessel_j(nu + 1.0, xs)
    rad = 2.0 - psi - 2.0 * math.gamma(nu + 2.0) * dpsi * dpsi
    with np.errstate(invalid="ignore"):
        out = (1.0 - psi) / np.sqrt(rad)
    return float(out[0]) if arr.ndim == 0 else out.reshape(arr.shape)


def limit_function_g(x):
    """(1 - J_0)/sqrt(2 - 2J_0 - 2 J_0'^2)."""
    arr, xs = _as_array(x)
    out = np.empty_like(xs)
    small = xs <= _LIMIT_SERIES_X
    if np.any(small):
        # J_0 = sum (-1/4)^k s^k / (k!)^2; radicand 2 - 2J_0 - 2 * 4 s (dJ_0/ds)^2
        out[small] = _series_ratio(_phi_coeffs(0.0, 40), 2.0, xs[small])
    big = ~small
    if np.any(big):
        j0 = bessel_j(0.0, xs[big])
        j1 = bessel_j(1.0, xs[big])
        out[big] = (1.0 - j0) / np.sqrt(2.0 - 2.0 * j0 - 2.0 * j1 * j1)
    return float(out[0]) if arr.ndim == 0 else out.reshape(arr.shape)


def limit_function_h(x):
    """(1 + J_0)/sqrt(2 + 2J_0 - 2 J_0'^2); no cancellation anywhere."""
    arr, xs = _as_array(x)
    j0 = bessel_j(0.0, xs)
    j1 = bessel_j(1.0, xs)
    out = (1.0 + j0) / np.sqrt(2.0 + 2.0 * j0 - 2.0 * j1 * j1)
    return float(out[0]) if arr.ndim == 0 else out.reshape(arr.shape)


def limit_at_zero(d: int) -> float:
    """F_d(0) = sqrt((d+4) / (3(d+2))); sqrt(2)/2 at d = 2."""
    return float(limit_function_f(0.0, d))


@dataclass(frozen=True)
class LowerBound:
    d: int
    value: float          # min{inf F_d on [0, x_max], 1/sqrt 2}
    grid_infimum: float
    argmin: float
    x_max: float
    tail_deviation: float  # sup_{x >= x_max} |F_d(x) - 1/sqrt 2| upper bound


# Landau's uniform bound |J_nu(x)| <= 0.7858 x^{-1/3}, x > 0, nu >= 0
_LANDAU = 0.7858


def tail_deviation_bound(d: int, x_max: float, kappa: float | None = None, shift: bool = True) -> float:
    """Upper bound on |F - 1/sqrt 2| for x >= x_max from the uniform Bessel bound."""
    nu = d / 2.0
    kappa = d + 2.0 if kappa is None else kappa
    pref = (math.gamma(nu + 1.0) * (2.0 / x_max) ** nu) if shift else 1.0
    eps = pref * _LANDAU * x_max ** (-1.0 / 3.0)
    if eps >= 1:
        return math.inf
    lo = (1 - eps) / math.sqrt(2 + 2 * eps)
    hi_rad = 2 - 2 * eps - kappa * eps * eps
    if hi_rad <= 0:
        return math.inf
    hi = (1 + eps) / math.sqrt(hi_rad)
    return max(SQRT_HALF - lo, hi - SQRT_HALF)


def _grid_inf(fn, x_max: float, grid_step: float, refine_tol: float = 1e-10):
    xs = np.arange(0.0, x_max + 0.5 * grid_step, grid_step)
    vals = fn(xs)
    i = int(np.argmin(vals))
    lo = np.array([xs[max(i - 1, 0)]])
    hi = np.array([xs[min(i + 1, xs.size - 1)]])
    t, v = _golden_many(lambda t: np.asarray(fn(t)), lo, hi, refine_tol)
    if float(v[0]) < vals[i]:
        return float(v[0]), float(t[0])
    return float(vals[i]), float(xs[i])


def asymptotic_lower_bound(d: int = 2, x_max: float = 200.0, grid_step: float = 1e-3) -> LowerBound:
    """min{ inf_{x >= 0} F_d(x), 1/sqrt 2 } with an explicit tail bound past x_max."""
    if x_max < 100 or grid_step > 1e-3:
        raise DomainError("need x_max >= 100 and grid_step <= 1e-3")
    inf_val, arg = _grid_inf(lambda t: limit_function_f(t, d), x_max, grid_step)
    tail = tail_deviation_bound(d, x_max)
    if SQRT_HALF - tail < min(inf_val, SQRT_HALF):
        raise NumericalInstabilityError("tail bound too weak to certify the infimum; raise x_max")
    return LowerBound(d=d, value=min(inf_val, SQRT_HALF), grid_infimum=inf_val, argmin=arg,
                      x_max=x_max, tail_deviation=tail)


def fixed_degree_bound(x_max: float = 200.0, grid_step: float = 1e-3) -> float:
    """min{inf g, inf h, 1/sqrt 2} for the single-level embedding."""
    g_inf, _ = _grid_inf(limit_function_g, x_max, grid_step)
    h_inf, _ = _grid_inf(limit_function_h, x_max, grid_step)
    return min(g_inf, h_inf, SQRT_HALF)


@dataclass(frozen=True)
class ConvergenceTable:
    d: int
    n_list: tuple[int, ...]
    sup_errors: tuple[float, ...]
    slope: float


def fit_loglog_slope(ns, errs, drop_first: bool = True) -> float:
    ns = np.asarray(ns, dtype=float)
    errs = np.asarray(errs, dtype=float)
    if drop_first and ns.size > 2:
        ns, errs = ns[1:], errs[1:]
    slope, _ = np.polyfit(np.log(ns), np.log(errs), 1)
    return float(slope)


def rescaled_convergence(n_list, d: int, x_grid) -> ConvergenceTable:
    """sup over x_grid of |r(x/n) - F_d(x)| for each n, plus the fitted log-log slope.

    x_grid must sit inside (0, n^(1/5)] for the smallest n.
    """
    x_grid = np.asarray(x_grid, dtype=float)
    n_list = tuple(int(n) for n in n_list)
    if np.any(x_grid <= 0) or x_grid.max() > min(n_list) ** 0.2 + 1e-12:
        raise DomainError("x_grid must lie in (0, n^(1/5)] for every n")
    ref = limit_function_f(x_grid, d)
    errs = tuple(float(np.max(np.abs(reach_functional(n, d, x_grid / n) - ref))) for n in n_list)
    return ConvergenceTable(d=d, n_list=n_list, sup_errors=errs, slope=fit_loglog_slope(n_list, errs))
