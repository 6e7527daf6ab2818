"""Hilb, Darboux and Mehler-Heine approximations of Jacobi polynomials,
measured against the recurrence values."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .reach import fit_loglog_slope
from .specfun import DomainError, JacobiParams, bessel_j, jacobi_p, jacobi_p_deriv, log_gamma


class Regime(str, enum.Enum):
    HILB = "Hilb"
    DARBOUX = "Darboux"
    MEHLER_HEINE_LEFT = "MehlerHeineLeft"
    MEHLER_HEINE_RIGHT = "MehlerHeineRight"
    DERIVATIVE = "DerivativeRescaling"


@dataclass(frozen=True)
class AsymptoticReport:
    regime: Regime
    n_list: tuple[int, ...]
    max_errors: tuple[float, ...]
    fitted_rate: float
    window: tuple[float, float]
    d: int | None = None

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.n_list, self.n_list[1:])):
            raise ValueError("n_list must be strictly increasing")

    def rows(self):
        for n, e in zip(self.n_list, self.max_errors):
            yield {
                "regime": self.regime.value if self.d is None else f"{self.regime.value}[d={self.d}]",
                "n": n,
                "window": f"[{self.window[0]:.6g}, {self.window[1]:.6g}]",
                "max_error": e,
                "fitted_rate": self.fitted_rate,
            }


def hilb_inner(n: int, alpha: float, beta: float, theta):
    """The Bessel term inside the braces of Hilb's formula:

        N^-alpha Gamma(n+alpha+1)/n! (theta/sin theta)^(1/2) J_alpha(N theta),

    N = n + (alpha + beta + 1)/2.
    """
    th = np.asarray(theta, dtype=float)
    big_n = n + (alpha + beta + 1) / 2
    const = math.exp(log_gamma(n + alpha + 1) - log_gamma(n + 1) - alpha * math.log(big_n))
    ratio = np.where(th > 0, th / np.sin(np.where(th > 0, th, 1.0)), 1.0)
    return const * np.sqrt(ratio) * bessel_j(alpha, big_n * th)


def hilb_main_term(n: int, alpha: float, beta: float, theta, epsilon: float = 0.1):
    """Main term of Hilb's formula for P_n^{(alpha, beta)}(cos theta), 0 < theta <= pi - epsilon."""
    th = np.asarray(theta, dtype=float)
    if np.any(th <= 0) or np.any(th > math.pi - epsilon + 1e-15):
        raise DomainError("Hilb main term needs 0 < theta <= pi - epsilon")
    pref = np.sin(th / 2) ** (-alpha) * np.cos(th / 2) ** (-beta)
    out = pref * hilb_inner(n, alpha, beta, th)
    return float(out) if th.ndim == 0 else out


def hilb_remainder(n: int, alpha: float, beta: float, theta):
    """R_{1,n}(theta) = (sin theta/2)^alpha (cos theta/2)^beta P_n(cos theta) - inner term."""
    th = np.asarray(theta, dtype=float)
    p = jacobi_p(JacobiParams(n, alpha, beta), np.cos(th))
    return np.sin(th / 2) ** alpha * np.cos(th / 2) ** beta * p - hilb_inner(n, alpha, beta, th)


def darboux_amplitude(theta, d: int = 2):
    """k(theta) = pi^-1/2 (sin theta/2)^(-lam-3/2) (cos theta/2)^(-lam-1/2)."""
    lam = (d - 2) / 2
    th = np.asarray(theta, dtype=float)
    return np.sin(th / 2) ** (-lam - 1.5) * np.cos(th / 2) ** (-lam - 0.5) / math.sqrt(math.pi)


def darboux_main_term(n: int, d: int, theta, c_prime: float = 1.0):
    """n^-1/2 k(theta) cos((n + lam + 1) theta + gamma), gamma = -(lam + 3/2) pi/2."""
    lam = (d - 2) / 2
    th = np.asarray(theta, dtype=float)
    if np.any(th < c_prime / n - 1e-15) or np.any(th > math.pi - c_prime / n + 1e-15):
        raise DomainError("Darboux main term needs c'/n <= theta <= pi - c'/n")
    phase = -(lam + 1.5) * math.pi / 2
    out = darboux_amplitude(th, d) * np.cos((n + lam + 1) * th + phase) / math.sqrt(n)
    return float(out) if th.ndim == 0 else out


def _jacobi_d(n: int, d: int) -> JacobiParams:
    lam = (d - 2) / 2
    return JacobiParams(n, 1.0 + lam, lam)


def hilb_check(n_list, d: int = 2, c: float = 1.0, epsilon: float = 0.1, points_per_n: int = 16) -> AsymptoticReport:
    """max over [c/n, pi - eps] of |R_{1,n}(theta)| / theta^(1/2), per n."""
    lam = (d - 2) / 2
    errs = []
    for n in n_list:
        th = np.linspace(c / n, math.pi - epsilon, max(4000, points_per_n * n))
        errs.append(float(np.max(np.abs(hilb_remainder(n, 1 + lam, lam, th)) / np.sqrt(th))))
    return AsymptoticReport(Regime.HILB, tuple(n_list), tuple(errs), fit_loglog_slope(n_list, errs),
                            (c, math.pi - epsilon), d)


def darboux_check(n_list, d: int = 2, theta: float = math.pi / 2) -> AsymptoticReport:
    """|P_n(cos theta) - Darboux main term| at a fixed interior angle."""
    errs = []
    for n in n_list:
        p = jacobi_p(_jacobi_d(n, d), math.cos(theta))
        errs.append(abs(p - darboux_main_term(n, d, theta)))
    return AsymptoticReport(Regime.DARBOUX, tuple(n_list), tuple(errs), fit_loglog_slope(n_list, errs),
                            (theta, theta), d)


def mehler_heine_limit(d: int, x, endpoint: str):
    """(x/2)^(-1-lam) J_{1+lam}(x) at the left end, (x/2)^(-lam) J_lam(x) at the right."""
    lam = (d - 2) / 2
    xs = np.asarray(x, dtype=float)
    if endpoint == "left":
        return (xs / 2) ** (-1 - lam) * bessel_j(1 + lam, xs)
    return (xs / 2) ** (-lam) * bessel_j(lam, xs)


def mehler_heine_scaled(n: int, d: int, x, endpoint: str):
    """The finite-n side. On the right the factor (-1)^n is restored:
    P_n^{(a,b)}(-y) = (-1)^n P_n^{(b,a)}(y)."""
    lam = (d - 2) / 2
    xs = np.asarray(x, dtype=float)
    p = _jacobi_d(n, d)
    if endpoint == "left":
        return n ** (-1 - lam) * jacobi_p(p, np.cos(xs / n))
    return (-1) ** n * n ** (-lam) * jacobi_p(p, np.cos(math.pi - xs / n))


def mehler_heine_check(n_list, d: int, x_grid, endpoint: str) -> AsymptoticReport:
    if endpoint not in ("left", "right"):
        raise DomainError("endpoint must be 'left' or 'right'")
    xs = np.asarray(x_grid, dtype=float)
    if np.any(xs <= 0):
        raise DomainError("x_grid must be positive (x = 0 is a parity-sensitive boundary)")
    ref = mehler_heine_limit(d, xs, endpoint)
    errs = [float(np.max(np.abs(mehler_heine_scaled(n, d, xs, endpoint) - ref))) for n in n_list]
    regime = Regime.MEHLER_HEINE_LEFT if endpoint == "left" else Regime.MEHLER_HEINE_RIGHT
    return AsymptoticReport(regime, tuple(n_list), tuple(errs), fit_loglog_slope(n_list, errs),
                            (float(xs.min()), float(xs.max())), d)


def derivative_rescaled(n: int, x):
    """(1/n^2) P_n'(cos theta) sin theta at theta = x/n, for P = P^{(1,0)}."""
    xs = np.asarray(x, dtype=float)
    th = xs / n
    return jacobi_p_deriv(JacobiParams(n, 1.0, 0.0), np.cos(th)) * np.sin(th) / n**2


def derivative_limit(x):
    """(2/x) J_2(x) = -((2/x) J_1(x))'."""
    xs = np.asarray(x, dtype=float)
    return 2.0 / xs * bessel_j(2.0, xs)


def derivative_rescaling_check(n_list, x_grid) -> AsymptoticReport:
    xs = np.asarray(x_grid, dtype=float)
    if np.any(xs <= 0):
        raise DomainError("x_grid must be positive")
    ref = derivative_limit(xs)
    errs = [float(np.max(np.abs(derivative_rescaled(n, xs) - ref))) for n in n_list]
    return AsymptoticReport(Regime.DERIVATIVE, tuple(n_list), tuple(errs), fit_loglog_slope(n_list, errs),
                            (float(xs.min()), float(xs.max())), 2)


def denominator_rescaled(n: int, x):
    """(1/(n+1)) [P_n'(cos theta) sin theta]^2 / P_n'(1) at theta = x/n, P = P^{(1,0)}."""
    xs = np.asarray(x, dtype=float)
    th = xs / n
    dp = jacobi_p_deriv(JacobiParams(n, 1.0, 0.0), np.cos(th)) * np.sin(th)
    return dp * dp / ((n + 1) * n * (n + 1) * (n + 2) / 4)


def default_reports(n_list=tuple(2**k for k in range(5, 13)), dims=(2, 3, 4)):
    """Everything the asymptotics command emits, in a fixed order."""
    x_mh = np.linspace(0.05, 1.0, 40)
    reports = [hilb_check(n_list, 2), darboux_check(n_list, 2)]
    for d in dims:
        for endpoint in ("left", "right"):
            reports.append(mehler_heine_check(n_list, d, x_mh, endpoint))
    reports.append(derivative_rescaling_check(n_list, np.linspace(0.05, 1.0, 40)))
    return reports
