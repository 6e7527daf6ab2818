"""Special functions: Gamma, Bessel J of real order, Jacobi polynomials and
real spherical harmonics on S^2.

Everything is float64 and vectorised over the argument where it matters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class DomainError(ValueError):
    """Argument outside the domain of a special function."""


@dataclass(frozen=True)
class JacobiParams:
    n: int
    alpha: float
    beta: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 0:
            raise DomainError(f"Jacobi degree must be a nonnegative integer, got {self.n}")
        if self.alpha <= -1 or self.beta <= -1:
            raise DomainError(f"need alpha, beta > -1, got ({self.alpha}, {self.beta})")


@dataclass(frozen=True)
class HarmonicIndex:
    ell: int
    m: int

    def __post_init__(self):
        if self.ell < 0 or abs(self.m) > self.ell:
            raise DomainError(f"invalid harmonic index (ell={self.ell}, m={self.m})")

    @property
    def flat(self) -> int:
        """Position in the (ell, m) ordering ell^2 + ell + m."""
        return self.ell * self.ell + self.ell + self.m


# ---------------------------------------------------------------------------
# Gamma


def gamma_fn(x: float) -> float:
    if not x > 0:
        raise DomainError(f"gamma_fn requires x > 0, got {x}")
    if x > 171.0:
        raise OverflowError("gamma_fn overflows float64 for x > 171; use log_gamma")
    return math.gamma(x)


def log_gamma(x: float) -> float:
    if not x > 0:
        raise DomainError(f"log_gamma requires x > 0, got {x}")
    return math.lgamma(x)


def binom_real(a: float, k: int) -> float:
    """Generalised binomial C(a, k) = Gamma(a+1)/(Gamma(k+1)Gamma(a-k+1)) for a >= k >= 0."""
    if k < 0 or a - k <= -1:
        raise DomainError(f"binom_real({a}, {k}) outside supported range")
    return math.exp(log_gamma(a + 1) - log_gamma(k + 1) - log_gamma(a - k + 1))


# ---------------------------------------------------------------------------
# Bessel J


_HANKEL_TOL = 1e-17
_HANKEL_MAX_TERMS = 60


def _hankel_coeffs(nu: float, nterms: int) -> np.ndarray:
    mu = 4.0 * nu * nu
    a = np.empty(nterms)
    a[0] = 1.0
    for k in range(1, nterms):
        a[k] = a[k - 1] * (mu - (2 * k - 1) ** 2) / (k * 8.0)
    return a


def _asymptotic_threshold(nu: float) -> float:
    # Below this the Hankel series cannot reach double precision before it diverges.
    return max(25.0, nu * nu)


def _bessel_series(nu: float, x: np.ndarray) -> np.ndarray:
    half = 0.5 * x
    q = -half * half
    term = np.ones_like(x)
    total = np.ones_like(x)
    k = 0
    while True:
        k += 1
        term = term * q / (k * (nu + k))
        total = total + term
        if np.all(np.abs(term) <= 1e-17 * np.abs(total)) or k > 500:
            break
    if nu == 0:
        return total
    with np.errstate(divide="ignore"):
        logpref = nu * np.log(half) - math.lgamma(nu + 1.0)
    return np.exp(logpref) * total


def _bessel_hankel(nu: float, x: np.ndarray) -> np.ndarray:
    a = _hankel_coeffs(nu, _HANKEL_MAX_TERMS)
    xmin = float(np.min(x))
    # truncate at the first term that is negligible (or starts to grow) at xmin
    nterms = _HANKEL_MAX_TERMS
    prev = math.inf
    for k in range(1, _HANKEL_MAX_TERMS):
        mag = abs(a[k]) / xmin**k
        if mag < _HANKEL_TOL or mag > prev:
            nterms = k
            break
        prev = mag
    inv = 1.0 / x
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    power = np.ones_like(x)
    for k in range(nterms):
        sign = -1.0 if (k // 2) % 2 else 1.0
        if k % 2 == 0:
            p += sign * a[k] * power
        else:
            q += sign * a[k] * power
        power = power * inv
    omega = x - (0.5 * nu + 0.25) * math.pi
    return np.sqrt(2.0 / (math.pi * x)) * (p * np.cos(omega) - q * np.sin(omega))


def _bessel_miller(nu: float, x: np.ndarray) -> np.ndarray:
    """Backward recurrence normalised by Neumann's identity

        (x/2)^nu0 = sum_k (nu0 + 2k) Gamma(nu0 + k)/k! J_{nu0+2k}(x),

    where nu0 = frac(nu).
    """
    order = int(math.floor(nu))
    nu0 = nu - order
    top = int(max(float(np.max(x)), order) + 40 + 4 * math.sqrt(float(np.max(x))))
    if (top % 2) == 1:
        top += 1

    # c_k for the Neumann sum, k = 0 .. top//2
    kmax = top // 2 + 1
    c = np.empty(kmax)
    c[0] = math.gamma(nu0 + 1.0)
    r = math.gamma(nu0 + 1.0)  # Gamma(nu0 + k)/k! at k = 1
    for k in range(1, kmax):
        c[k] = (nu0 + 2 * k) * r
        r *= (nu0 + k) / (k + 1)

    f_next = np.zeros_like(x)       # f_{j+1}
    f_cur = np.full_like(x, 1e-30)  # f_j
    total = np.zeros_like(x)
    wanted = np.zeros_like(x)
    two_over_x = 2.0 / x
    for j in range(top, -1, -1):
        if j == order:
            wanted = f_cur.copy()
        if j % 2 == 0:
            total += c[j // 2] * f_cur
        if j == 0:
            break
        f_prev = (nu0 + j) * two_over_x * f_cur - f_next
        f_next, f_cur = f_cur, f_prev
        big = np.abs(f_cur) > 1e250
        if np.any(big):
            scale = np.where(big, 1e-250, 1.0)
            f_cur *= scale
            f_next *= scale
            total *= scale
            wanted *= scale
    return wanted * np.power(0.5 * x, nu0) / total


def bessel_j(nu: float, x):
    """Bessel function of the first kind J_nu(x) for real nu >= 0, x >= 0.

    Three regimes: ascending series where its terms decrease from the
    start, Miller backward recurrence in the transition zone, and the
    Hankel asymptotic expansion for x >= max(25, nu^2).
    """
    if nu < 0:
        raise DomainError(f"bessel_j requires nu >= 0, got {nu}")
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise DomainError("bessel_j requires x >= 0")
    scalar = arr.ndim == 0
    xs = np.atleast_1d(arr).ravel()
    out = np.empty_like(xs)

    zero = xs == 0.0
    series = ~zero & (xs <= 2.0 * math.sqrt(nu + 1.0))
    hankel = ~zero & ~series & (xs >= _asymptotic_threshold(nu))
    miller = ~zero & ~series & ~hankel

    out[zero] = 1.0 if nu == 0 else 0.0
    if np.any(series):
        out[series] = _bessel_series(nu, xs[series])
    if np.any(hankel):
        out[hankel] = _bessel_hankel(nu, xs[hankel])
    if np.any(miller):
        out[miller] = _bessel_miller(nu, xs[miller])
    out = out.reshape(np.shape(arr)) if not scalar else out
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# Jacobi polynomials


def _check_unit_interval(x) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if np.any(np.abs(arr) > 1.0 + 1e-12) or np.any(np.isnan(arr)):
        raise DomainError("Jacobi argument must satisfy |x| <= 1")
    return np.clip(arr, -1.0, 1.0)


def _jacobi_recurrence(n: int, a: float, b: float, x: np.ndarray) -> np.ndarray:
    p_prev = np.ones_like(x)
    if n == 0:
        return p_prev
    p = 0.5 * (a - b + (a + b + 2.0) * x)
    apb = a + b
    a2b2 = a * a - b * b
    for k in range(2, n + 1):
        c = 2.0 * k + apb
        a1 = 2.0 * k * (k + apb) * (c - 2.0)
        a2 = (c - 1.0) * a2b2
        a3 = (c - 2.0) * (c - 1.0) * c
        a4 = 2.0 * (k + a - 1.0) * (k + b - 1.0) * c
        p_prev, p = p, ((a2 + a3 * x) * p - a4 * p_prev) / a1
    return p


def jacobi_p(p: JacobiParams, x):
    """P_n^{(alpha, beta)}(x) by the three-term recurrence in the degree."""
    xs = _check_unit_interval(x)
    out = _jacobi_recurrence(p.n, p.alpha, p.beta, np.atleast_1d(xs).astype(float))
    return float(out[0]) if np.ndim(xs) == 0 else out.reshape(np.shape(xs))


def jacobi_p_deriv(p: JacobiParams, x, order: int = 1):
    """order-th derivative of P_n^{(alpha, beta)} via the shift rule

    d/dx P_n^{(a,b)} = (n + a + b + 1)/2 * P_{n-1}^{(a+1, b+1)}.
    """
    xs = _check_unit_interval(x)
    if order > p.n:
        out = np.zeros(np.shape(xs))
        return float(out) if np.ndim(xs) == 0 else out
    scale = math.exp(
        log_gamma(p.n + p.alpha + p.beta + 1 + order)
        - log_gamma(p.n + p.alpha + p.beta + 1)
        - order * math.log(2.0)
    )
    shifted = JacobiParams(p.n - order, p.alpha + order, p.beta + order)
    return scale * jacobi_p(shifted, xs)


def jacobi_at_one(p: JacobiParams) -> float:
    """P_n^{(alpha, beta)}(1) = C(n + alpha, n)."""
    return binom_real(p.n + p.alpha, p.n)


def jacobi_deriv_at_one(p: JacobiParams, order: int = 1) -> float:
    if order > p.n:
        return 0.0
    scale = math.exp(
        log_gamma(p.n + p.alpha + p.beta + 1 + order)
        - log_gamma(p.n + p.alpha + p.beta + 1)
        - order * math.log(2.0)
    )
    return scale * jacobi_at_one(JacobiParams(p.n - order, p.alpha + order, p.beta + order))


def jacobi_p_sum(p: JacobiParams, x: float) -> float:
    """Explicit binomial-sum definition. Cancels badly for large n; kept for checks."""
    n, a, b = p.n, p.alpha, p.beta
    total = 0.0
    for s in range(n + 1):
        total += (
            binom_real(n + a, s)
            * binom_real(n + b, n - s)
            * ((x - 1) / 2) ** (n - s)
            * ((x + 1) / 2) ** s
        )
    return total


# ---------------------------------------------------------------------------
# Real spherical harmonics on S^2


def _check_unit_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.shape[-1] != 3:
        raise DomainError("points must have a trailing dimension of 3")
    norms = np.linalg.norm(pts, axis=-1)
    if np.any(np.abs(norms - 1.0) > 1e-12):
        raise DomainError("points must lie on the unit sphere (|x| = 1 within 1e-12)")
    return pts


def _legendre_tables(n: int, cos_t: np.ndarray, sin_t: np.ndarray):
    """Fully normalised associated Legendre values.

    Returns ``pbar[l, m]`` = sqrt((2l+1)/(4pi) (l-m)!/(l+m)!) P_l^m(cos t)
    (no Condon-Shortley phase) and ``q[l, m]`` = pbar[l, m]/sin t for m >= 1,
    computed directly so it stays finite at the poles.
    """
    npts = cos_t.shape[0]
    pbar = np.zeros((n + 1, n + 1, npts))
    q = np.zeros((n + 1, n + 1, npts))
    pbar[0, 0] = 1.0 / math.sqrt(4.0 * math.pi)
    diag = pbar[0, 0].copy()
    for m in range(1, n + 1):
        # q_m^m = sqrt((2m+1)/(2m)) pbar_{m-1}^{m-1}; pbar_m^m = q_m^m sin t
        q[m, m] = math.sqrt((2.0 * m + 1.0) / (2.0 * m)) * diag
        diag = q[m, m] * sin_t
        pbar[m, m] = diag
    for m in range(0, n):
        f = math.sqrt(2.0 * m + 3.0)
        pbar[m + 1, m] = f * cos_t * pbar[m, m]
        if m >= 1:
            q[m + 1, m] = f * cos_t * q[m, m]
        for ell in range(m + 2, n + 1):
            a = math.sqrt((4.0 * ell * ell - 1.0) / (ell * ell - m * m))
            b = math.sqrt(((ell - 1.0) ** 2 - m * m) / (4.0 * (ell - 1.0) ** 2 - 1.0))
            pbar[ell, m] = a * (cos_t * pbar[ell - 1, m] - b * pbar[ell - 2, m])
            if m >= 1:
                q[ell, m] = a * (cos_t * q[ell - 1, m] - b * q[ell - 2, m])
    return pbar, q


def _angles(pts: np.ndarray):
    cos_t = np.clip(pts[:, 2], -1.0, 1.0)
    sin_t = np.hypot(pts[:, 0], pts[:, 1])
    phi = np.arctan2(pts[:, 1], pts[:, 0])
    return cos_t, sin_t, phi


def sph_harm_table(n: int, points) -> np.ndarray:
    """All real spherical harmonics of level <= n at the given points.

    Shape ``(npts, (n+1)**2)``; column ``l*l + l + m`` holds Y_{lm}. For m > 0
    Y_{lm} = sqrt(2) pbar_l^m cos(m phi), for m < 0 sqrt(2) pbar_l^|m| sin(|m| phi).
    """
    pts = np.atleast_2d(_check_unit_points(points))
    cos_t, sin_t, phi = _angles(pts)
    pbar, _ = _legendre_tables(n, cos_t, sin_t)
    out = np.empty((pts.shape[0], (n + 1) ** 2))
    root2 = math.sqrt(2.0)
    for m in range(0, n + 1):
        if m == 0:
            for ell in range(n + 1):
                out[:, ell * ell + ell] = pbar[ell, 0]
            continue
        c = root2 * np.cos(m * phi)
        s = root2 * np.sin(m * phi)
        for ell in range(m, n + 1):
            base = ell * ell + ell
            out[:, base + m] = pbar[ell, m] * c
            out[:, base - m] = pbar[ell, m] * s
    return out


def sph_harm_gradient_table(n: int, points):
    """Derivatives of every Y_{lm} along the orthonormal frame (e_theta, e_phi).

    Returns ``(d_theta, d_phi, e_theta, e_phi)``; the first two have the
    shape of :func:`sph_harm_table`, the frames have shape ``(npts, 3)``.
    At a pole the frame is the limit along phi = atan2(y, x).
    """
    pts = np.atleast_2d(_check_unit_points(points))
    cos_t, sin_t, phi = _angles(pts)
    pbar, q = _legendre_tables(n, cos_t, sin_t)
    npts = pts.shape[0]
    d_theta = np.zeros((npts, (n + 1) ** 2))
    d_phi = np.zeros((npts, (n + 1) ** 2))
    root2 = math.sqrt(2.0)

    # d pbar_l^0/dtheta = -sqrt(l(l+1)) pbar_l^1
    for ell in range(1, n + 1):
        d_theta[:, ell * ell + ell] = -math.sqrt(ell * (ell + 1.0)) * pbar[ell, 1]
    for m in range(1, n + 1):
        c = np.cos(m * phi)
        s = np.sin(m * phi)
        for ell in range(m, n + 1):
            # d pbar_l^m/dtheta = l cos t q_l^m - sqrt((2l+1)(l^2-m^2)/(2l-1)) q_{l-1}^m
            dp = ell * cos_t * q[ell, m]
            if ell - 1 >= m:
                dp = dp - math.sqrt((2.0 * ell + 1.0) * (ell * ell - m * m) / (2.0 * ell - 1.0)) * q[ell - 1, m]
            base = ell * ell + ell
            d_theta[:, base + m] = root2 * dp * c
            d_theta[:, base - m] = root2 * dp * s
            d_phi[:, base + m] = -root2 * m * q[ell, m] * s
            d_phi[:, base - m] = root2 * m * q[ell, m] * c
    cp, sp = np.cos(phi), np.sin(phi)
    e_theta = np.stack([cp * cos_t, sp * cos_t, -sin_t], axis=1)
    e_phi = np.stack([-sp, cp, np.zeros_like(cp)], axis=1)
    return d_theta, d_phi, e_theta, e_phi


def real_spherical_harmonic(idx: HarmonicIndex, point) -> float:
    table = sph_harm_table(idx.ell, np.asarray(point, dtype=float)[None, :])
    return float(table[0, idx.flat])
