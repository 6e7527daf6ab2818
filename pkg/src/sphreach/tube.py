"""Spherical tube formula and the exact exceedence probability of the
supremum of a spherical-ensemble random field.

For a coefficient vector a uniform on S^{k-1}, k = pi_n^d,

    sup_x Phi(x) > u   <=>   a lies within geodesic distance arccos(v)
                             of the image i_n(S^d),  v = u sqrt(s_d / k),

so the probability is the normalised volume of a tube in S^{k-1}. The
image is a round S^d of radius sqrt(n(n+d)/(d+2)) intrinsically; Weyl's
formula in a unit sphere weights the tube functions by the
curvature-adjusted Lipschitz-Killing curvatures of that sphere.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate

from .kernel import metric_scale, total_dim
from .specfun import DomainError, log_gamma


class InvalidQueryError(ValueError):
    """The tube at this level may self-intersect."""

    def __init__(self, message: str, critical_radius: float):
        super().__init__(message)
        self.critical_radius = critical_radius


def sphere_surface_area(d: int) -> float:
    """s_d = 2 pi^{(d+1)/2} / Gamma((d+1)/2), the volume of the unit S^d."""
    return math.exp(log_sphere_surface_area(d))


def log_sphere_surface_area(d: int) -> float:
    """log s_d; s_d underflows once d is a few hundred."""
    if d < 0:
        raise DomainError("d must be >= 0")
    return math.log(2.0) + 0.5 * (d + 1) * math.log(math.pi) - log_gamma(0.5 * (d + 1))


def unit_ball_volume(p: int) -> float:
    """omega_p = pi^{p/2} / Gamma(p/2 + 1)."""
    return math.exp(0.5 * p * math.log(math.pi) - log_gamma(0.5 * p + 1))


def lk_curvature(j: int, d: int) -> float:
    """Standard j-th Lipschitz-Killing curvature of the unit S^d."""
    if not 0 <= j <= d:
        raise DomainError(f"need 0 <= j <= d, got j={j}, d={d}")
    if (d - j) % 2:
        return 0.0
    return 2.0 * math.comb(d, j) * sphere_surface_area(d) / sphere_surface_area(d - j)


def spherical_lk_curvature(j: int, d: int, scale: float) -> float:
    """Curvature-adjusted (kappa = 1) LK curvature of a round S^d of squared radius ``scale``:

        L_j^1 = sum_l (-1)^l (j+2l)! / ((4 pi)^l l! j!) scale^{(j+2l)/2} L_{j+2l}(S^d).
    """
    if not 0 <= j <= d:
        raise DomainError(f"need 0 <= j <= d, got j={j}, d={d}")
    total = 0.0
    for l in range((d - j) // 2 + 1):
        i = j + 2 * l
        coef = (-1) ** l * math.factorial(i) / ((4 * math.pi) ** l * math.factorial(l) * math.factorial(j))
        total += coef * scale ** (i / 2) * lk_curvature(i, d)
    return total


def tube_coefficient(k: int, j: int, rho: float) -> float:
    """f_{k,j}(rho) = s_{k-2-j} int_0^rho cos^j(r) sin^{k-2-j}(r) dr."""
    return math.exp(log_tube_coefficient(k, j, rho))


def log_tube_coefficient(k: int, j: int, rho: float) -> float:
    """log f_{k,j}(rho), or -inf at rho = 0.

    The integrand is rescaled by sin(rho)^p so large k does not underflow.
    """
    if k <= j + 1:
        raise DomainError(f"need k >= j + 2, got k={k}, j={j}")
    if rho < 0:
        raise DomainError("rho must be >= 0")
    if rho == 0:
        return -math.inf
    p = k - 2 - j
    peak = math.sin(min(rho, math.pi / 2))
    val, _ = integrate.quad(lambda r: math.cos(r) ** j * (math.sin(r) / peak) ** p, 0.0, rho,
                            epsabs=1e-14 * rho, epsrel=1e-12, limit=200)
    if val <= 0:
        return -math.inf
    return log_sphere_surface_area(p) + p * math.log(peak) + math.log(val)


@dataclass(frozen=True)
class TubeQuery:
    n: int
    d: int
    u: float
    v: float
    rho_u: float
    valid: bool
    critical_radius: float

    def to_json(self) -> dict:
        return asdict(self)


@lru_cache(maxsize=64)
def _critical_radius(n: int, d: int) -> float:
    from .reach import critical_radius

    return critical_radius(n, d).global_min


def field_bound(n: int, d: int) -> float:
    """sqrt(pi_n^d / s_d), the largest value a unit-norm field can reach."""
    return math.sqrt(total_dim(n, d) / sphere_surface_area(d))


def make_query(n: int, d: int, *, u: float | None = None, v: float | None = None,
               critical_radius: float | None = None) -> TubeQuery:
    """Build a query from either the level u or the normalised level v."""
    if (u is None) == (v is None):
        raise DomainError("give exactly one of u, v")
    bound = field_bound(n, d)
    if v is None:
        v = u / bound
    else:
        u = v * bound
    if not -1 < v <= 1:
        raise DomainError(f"normalised level must lie in (-1, 1], got {v}")
    rho = math.acos(v)
    crit = _critical_radius(n, d) if critical_radius is None else critical_radius
    valid = 2.0 * math.sin(rho / 2) < crit
    return TubeQuery(n=n, d=d, u=float(u), v=float(v), rho_u=rho, valid=valid, critical_radius=crit)


def tube_terms(n: int, d: int, rho: float, form: str = "adjusted") -> list[float]:
    """Per-j contributions to the normalised tube volume.

    ``form="adjusted"`` uses the curvature-adjusted curvatures of the image;
    ``form="literal"`` uses scale^{j/2} L_j(S^d) unmodified.
    """
    k = total_dim(n, d)
    scale = metric_scale(n, d)
    log_norm = log_sphere_surface_area(k - 1)
    out = []
    for j in range(d + 1):
        if form == "adjusted":
            lk = spherical_lk_curvature(j, d, scale)
        elif form == "literal":
            lk = scale ** (j / 2) * lk_curvature(j, d)
        else:
            raise DomainError(f"unknown form {form!r}")
        out.append(math.exp(log_tube_coefficient(k, j, rho) - log_norm) * lk if lk else 0.0)
    return out


def exceedence_probability(query: TubeQuery, form: str = "adjusted") -> float:
    """P{sup Phi > u} for the spherical ensemble, valid below the critical radius."""
    if not query.valid:
        raise InvalidQueryError(
            f"tube radius {query.rho_u:.6g} (chord {2 * math.sin(query.rho_u / 2):.6g}) "
            f"reaches the critical radius {query.critical_radius:.6g}",
            query.critical_radius,
        )
    if query.rho_u == 0.0:
        return 0.0
    return float(sum(tube_terms(query.n, query.d, query.rho_u, form)))


def flat_tube_probability(n: int, d: int, rho: float, form: str = "adjusted") -> float:
    """Small-rho approximation: f_{k,j} replaced by omega_{k-1-j} rho^{k-1-j}."""
    k = total_dim(n, d)
    scale = metric_scale(n, d)
    log_norm = log_sphere_surface_area(k - 1)
    total = 0.0
    for j in range(d + 1):
        lk = spherical_lk_curvature(j, d, scale) if form == "adjusted" else scale ** (j / 2) * lk_curvature(j, d)
        if lk and rho > 0:
            p = k - 1 - j
            total += lk * math.exp(0.5 * p * math.log(math.pi) - log_gamma(0.5 * p + 1) + p * math.log(rho) - log_norm)
    return total


def degree_one_tube_probability(d: int, rho: float) -> float:
    """Closed form for n = 1: the image is the latitude sphere {y_0 = 1/sqrt(d+2)}
    of S^{d+1}, so the tube is a band around polar angle a = arccos(1/sqrt(d+2))."""
    a = math.acos(1.0 / math.sqrt(d + 2))
    lo, hi = max(a - rho, 0.0), min(a + rho, math.pi)
    val, _ = integrate.quad(lambda t: math.sin(t) ** d, lo, hi, epsabs=1e-15, epsrel=1e-13)
    return sphere_surface_area(d) * val / sphere_surface_area(d + 1)


def probability_curve(n: int, d: int, vs) -> np.ndarray:
    return np.array([exceedence_probability(make_query(n, d, v=v)) for v in vs])
