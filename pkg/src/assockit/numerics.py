"""Special functions and the one matrix decomposition the statistics need.

The chi-squared tail comes from the regularized incomplete gamma function,
evaluated with the usual regime split: power series for ``x < a + 1`` and a
Lentz continued fraction otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InvalidDomain, NonFiniteInput

__all__ = [
    "gammainc_lower",
    "gammainc_upper",
    "chi2_sf",
    "chi2_cdf",
    "chi2_isf",
    "noncentral_chi2_cdf",
    "log_choose",
    "log_factorials",
    "SvdResult",
    "svd",
]

_EPS = 1e-16
_TINY = 1e-300
_MAX_ITER = 100_000


def _series_lower(a: float, x: float) -> float:
    # P(a, x) = x^a e^-x / Gamma(a+1) * sum_k x^k / ((a+1)...(a+k))
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(a * math.log(x) - x - math.lgamma(a))


def _cfrac_upper(a: float, x: float) -> float:
    # modified Lentz evaluation of the continued fraction for Q(a, x)
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return math.exp(a * math.log(x) - x - math.lgamma(a)) * h


def gammainc_lower(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x)."""
    if not (a > 0) or not (x >= 0) or math.isinf(a):
        raise InvalidDomain(f"gammainc_lower needs a > 0 and x >= 0 (a={a}, x={x})")
    if x == 0:
        return 0.0
    if math.isinf(x):
        return 1.0
    if x < a + 1.0:
        return min(1.0, _series_lower(a, x))
    return max(0.0, 1.0 - _cfrac_upper(a, x))


def gammainc_upper(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x)."""
    if not (a > 0) or not (x >= 0) or math.isinf(a):
        raise InvalidDomain(f"gammainc_upper needs a > 0 and x >= 0 (a={a}, x={x})")
    if x == 0:
        return 1.0
    if math.isinf(x):
        return 0.0
    if x < a + 1.0:
        return max(0.0, 1.0 - _series_lower(a, x))
    return min(1.0, _cfrac_upper(a, x))


def _check_chi2_args(x, df):
    if isinstance(x, bool) or not isinstance(x, (int, float, np.integer, np.floating)):
        raise InvalidDomain(f"x must be a real number, got {x!r}")
    if math.isnan(x) or x < 0:
        raise InvalidDomain(f"x must be >= 0, got {x}")
    if df != int(df) or df < 1:
        raise InvalidDomain(f"df must be a positive integer, got {df}")


def chi2_sf(x: float, df: int) -> float:
    """Upper tail P(X > x) of a central chi-squared variable with ``df`` d.o.f."""
    _check_chi2_args(x, df)
    return gammainc_upper(df / 2.0, x / 2.0)


def chi2_cdf(x: float, df: int) -> float:
    _check_chi2_args(x, df)
    return gammainc_lower(df / 2.0, x / 2.0)


def _chi2_logpdf(x: float, df: int) -> float:
    k = df / 2.0
    return (k - 1.0) * math.log(x) - x / 2.0 - k * math.log(2.0) - math.lgamma(k)


@lru_cache(maxsize=4096)
def chi2_isf(p: float, df: int) -> float:
    """Inverse of :func:`chi2_sf`: the x with ``chi2_sf(x, df) == p``."""
    if not (0.0 < p < 1.0):
        raise InvalidDomain(f"tail probability must lie in (0, 1), got {p}")
    if df != int(df) or df < 1:
        raise InvalidDomain(f"df must be a positive integer, got {df}")
    df = int(df)
    # bracket, then safeguarded Newton on sf(x) - p
    lo, hi = 0.0, max(1.0, 2.0 * df)
    while chi2_sf(hi, df) > p:
        lo, hi = hi, hi * 2.0
    # Wilson-Hilferty start, clipped into the bracket
    z = _norm_isf(p)
    h = 2.0 / (9.0 * df)
    x = df * max(1.0 - h + z * math.sqrt(h), 1e-3) ** 3
    if not (lo < x < hi):
        x = 0.5 * (lo + hi)
    for _ in range(200):
        f = chi2_sf(x, df) - p
        if f > 0:
            lo = x
        else:
            hi = x
        dens = math.exp(_chi2_logpdf(x, df))
        step = f / dens if dens > 0 else 0.0
        nx = x + step
        if not (lo < nx < hi) or dens == 0:
            nx = 0.5 * (lo + hi)
        if abs(nx - x) <= 1e-14 * max(1.0, x) or hi - lo <= 1e-14 * max(1.0, x):
            x = nx
            break
        x = nx
    return x


def _norm_isf(p: float) -> float:
    # rough normal quantile (Abramowitz-Stegun 26.2.23); only seeds Newton
    q = p if p < 0.5 else 1.0 - p
    t = math.sqrt(-2.0 * math.log(q))
    z = t - (2.515517 + 0.802853 * t + 0.010328 * t * t) / (
        1.0 + 1.432788 * t + 0.189269 * t * t + 0.001308 * t ** 3
    )
    return z if p < 0.5 else -z


def noncentral_chi2_cdf(x: float, df: int, lam: float, tol: float = 1e-12) -> float:
    """CDF of the noncentral chi-squared distribution.

    Poisson(lam/2)-weighted mixture of central chi-squared CDFs with
    ``df + 2j`` degrees of freedom.  Summation starts at the Poisson mode and
    walks outwards with three-term recurrences for both the weights and the
    incomplete gamma values; it stops once the unvisited Poisson mass drops
    below ``tol``.
    """
    _check_chi2_args(x, df)
    if isinstance(lam, bool) or math.isnan(lam) or lam < 0 or math.isinf(lam):
        raise InvalidDomain(f"noncentrality must be finite and >= 0, got {lam}")
    if x == 0:
        return 0.0
    if lam == 0:
        return chi2_cdf(x, df)
    if math.isinf(x):
        return 1.0

    mu = lam / 2.0
    y = x / 2.0
    a0 = df / 2.0
    j0 = int(math.floor(mu))

    w0 = math.exp(-mu + j0 * math.log(mu) - math.lgamma(j0 + 1.0)) if j0 > 0 else math.exp(-mu)
    p0 = gammainc_lower(a0 + j0, y)
    # g(a) = y^a e^-y / Gamma(a+1);  P(a+1, y) = P(a, y) - g(a)
    log_g0 = (a0 + j0) * math.log(y) - y - math.lgamma(a0 + j0 + 1.0)

    total = w0 * p0
    mass = w0

    # upward: j = j0+1, j0+2, ...  Past the mode the remaining Poisson tail is
    # bounded by a geometric series in r = mu/(j+1).
    w, p, g = w0, p0, math.exp(log_g0)
    j = j0
    while True:
        a = a0 + j
        p = max(p - g, 0.0)
        g *= y / (a + 1.0)
        j += 1
        w *= mu / j
        total += w * p
        mass += w
        r = mu / (j + 1.0)
        if w == 0.0 or (r < 1.0 and w * r / (1.0 - r) < tol / 2.0):
            break

    # downward: j = j0-1, ..., 0
    w, p, g = w0, p0, math.exp(log_g0)
    j = j0
    while j > 0 and 1.0 - mass > tol / 2.0:
        a = a0 + j
        # g(a-1) = g(a) * a / y ; P(a-1) = P(a) + g(a-1)
        g = g * a / y
        p = min(p + g, 1.0)
        w *= j / mu
        j -= 1
        total += w * p
        mass += w
    return min(max(total, 0.0), 1.0)


_LOG_2PI = math.log(2.0 * math.pi)
_EXACT_COMB_MAX_N = 1030


def _stirling_err(x: int) -> float:
    # log(x!) - [0.5*log(2*pi*x) + x*log(x) - x]
    if x < 15:
        return math.lgamma(x + 1.0) - (0.5 * (_LOG_2PI + math.log(x)) + x * math.log(x) - x)
    x2 = float(x) * x
    return (1.0 / 12.0 - (1.0 / 360.0 - (1.0 / 1260.0 - 1.0 / (1680.0 * x2)) / x2) / x2) / x


def log_choose(n: int, k: int) -> float:
    """Natural log of the binomial coefficient C(n, k).

    Exact integer arithmetic for small n; for larger n a Stirling expansion
    arranged so that no large terms cancel.
    """
    if n != int(n) or k != int(k) or n < 0 or k < 0 or k > n:
        raise InvalidDomain(f"log_choose needs integers 0 <= k <= n (n={n}, k={k})")
    n, k = int(n), int(k)
    m = n - k
    if k == 0 or m == 0:
        return 0.0
    if n <= _EXACT_COMB_MAX_N:
        return math.log(math.comb(n, k))
    k, m = min(k, m), max(k, m)
    # k*log(n/k) + m*log(n/m), both terms positive
    main = k * math.log(n / k) - m * math.log1p(-k / n)
    return (
        main
        + 0.5 * (math.log(n) - math.log(k) - math.log(m) - _LOG_2PI)
        + _stirling_err(n) - _stirling_err(k) - _stirling_err(m)
    )


def log_factorials(n: int) -> np.ndarray:
    """Array ``out[m] = log(m!)`` for m = 0..n."""
    lg = np.frompyfunc(math.lgamma, 1, 1)
    return lg(np.arange(1, n + 2, dtype=np.float64)).astype(np.float64)


@dataclass(frozen=True)
class SvdResult:
    left_vectors: np.ndarray
    singular_values: np.ndarray
    right_vectors: np.ndarray


def svd(matrix) -> SvdResult:
    """Thin SVD with a fixed sign convention.

    In every left singular vector the entry of largest magnitude is made
    nonnegative (ties go to the lowest index); the matching right vector is
    flipped with it.  Backed by LAPACK through numpy.
    """
    a = np.asarray(matrix, dtype=np.float64)
    if a.ndim != 2:
        raise InvalidDomain("svd expects a 2-d matrix")
    if not np.all(np.isfinite(a)):
        raise NonFiniteInput("matrix contains NaN or infinite entries")
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    v = vt.T.copy()
    u = u.copy()
    for col in range(u.shape[1]):
        idx = int(np.argmax(np.abs(u[:, col])))  # argmax returns the first maximum
        if u[idx, col] < 0:
            u[:, col] = -u[:, col]
            v[:, col] = -v[:, col]
    return SvdResult(u, s, v)
