"""Dimensions of harmonic spaces and the normalised spectral projection kernel."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .specfun import (
    DomainError,
    JacobiParams,
    _check_unit_points,
    jacobi_p,
    log_gamma,
    sph_harm_table,
)


def eigenspace_dim(ell: int, d: int) -> int:
    """k_ell^d = (2 ell + d - 1)/(ell + d - 1) * C(ell + d - 1, d - 1), exactly."""
    if d < 2:
        raise DomainError(f"sphere dimension must be >= 2, got {d}")
    if ell < 0:
        raise DomainError(f"level must be >= 0, got {ell}")
    num = (2 * ell + d - 1) * math.comb(ell + d - 1, d - 1)
    q, r = divmod(num, ell + d - 1)
    assert r == 0
    return q


def total_dim(n: int, d: int) -> int:
    """pi_n^d = (2n + d)/d * C(n + d - 1, d - 1), exactly."""
    if d < 2:
        raise DomainError(f"sphere dimension must be >= 2, got {d}")
    if n < 0:
        raise DomainError(f"degree cutoff must be >= 0, got {n}")
    q, r = divmod((2 * n + d) * math.comb(n + d - 1, d - 1), d)
    assert r == 0
    return q


def metric_scale(n: int, d: int) -> float:
    """Conformal factor n(n+d)/(d+2) of the pull-back metric."""
    if n < 0 or d < 2:
        raise DomainError(f"invalid (n, d) = ({n}, {d})")
    return n * (n + d) / (d + 2)


@dataclass(frozen=True)
class KernelSpec:
    n: int
    d: int
    lam: float = field(init=False)
    total_dim: int = field(init=False)
    norm_const: float = field(init=False)

    def __post_init__(self):
        if self.n < 0 or self.d < 2:
            raise DomainError(f"invalid (n, d) = ({self.n}, {self.d})")
        object.__setattr__(self, "lam", (self.d - 2) / 2)
        object.__setattr__(self, "total_dim", total_dim(self.n, self.d))
        # C(n + d/2, n) through log-gamma; exact enough and no overflow
        c = math.exp(log_gamma(self.n + self.d / 2 + 1) - log_gamma(self.n + 1) - log_gamma(self.d / 2 + 1))
        object.__setattr__(self, "norm_const", c)

    @property
    def jacobi(self) -> JacobiParams:
        return JacobiParams(self.n, 1.0 + self.lam, self.lam)

    @property
    def metric_scale(self) -> float:
        return metric_scale(self.n, self.d)


def normalized_kernel(spec: KernelSpec, cos_theta):
    """Pi_n^d(cos theta) = P_n^{(1+lam, lam)}(cos theta) / C(n + d/2, n)."""
    return jacobi_p(spec.jacobi, cos_theta) / spec.norm_const


def kernel_by_basis_sum(n: int, x, y) -> float:
    """K_n(x, y) on S^2 by summing Y_lm(x) Y_lm(y) over the explicit basis."""
    pts = _check_unit_points(np.stack([np.asarray(x, float), np.asarray(y, float)]))
    table = sph_harm_table(n, pts)
    return float(table[0] @ table[1])


def kernel_closed_form(n: int, x, y) -> float:
    """Christoffel-Darboux form ((n+1)/4pi) P_n^{(1,0)}(cos Theta)."""
    c = float(np.clip(np.dot(x, y), -1.0, 1.0))
    return (n + 1) / (4 * math.pi) * jacobi_p(JacobiParams(n, 1.0, 0.0), c)
