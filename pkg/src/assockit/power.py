"""Effect sizes and power for the chi-squared test of association."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

from .errors import InvalidDomain, Unachievable
from .numerics import chi2_isf, noncentral_chi2_cdf

__all__ = [
    "EffectSizes",
    "PowerQuery",
    "OMEGA_CUTOFFS",
    "OMEGA_GRID",
    "effect_sizes",
    "omega_label",
    "chi2_power",
    "required_n",
]

# Cohen's conventional cutoffs for omega
OMEGA_CUTOFFS = {"small": 0.1, "medium": 0.3, "large": 0.5}
OMEGA_GRID = (0.1, 0.3, 0.5)


@dataclass(frozen=True)
class EffectSizes:
    omega: float
    cramers_v: float
    phi: Optional[float] = None

    @property
    def label(self) -> str:
        return omega_label(self.omega)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["omega_label"] = self.label
        return d


@dataclass(frozen=True)
class PowerQuery:
    omega: float
    n: float
    df: int
    alpha: float = 0.05

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise InvalidDomain(f"alpha must lie in (0, 1), got {self.alpha}")
        if not (self.omega >= 0.0) or math.isinf(self.omega):
            raise InvalidDomain(f"omega must be finite and >= 0, got {self.omega}")
        if not (self.n > 0.0) or math.isinf(self.n):
            raise InvalidDomain(f"n must be positive, got {self.n}")
        if self.df != int(self.df) or self.df < 1:
            raise InvalidDomain(f"df must be a positive integer, got {self.df}")


def omega_label(omega: float) -> str:
    if omega >= OMEGA_CUTOFFS["large"]:
        return "large"
    if omega >= OMEGA_CUTOFFS["medium"]:
        return "medium"
    if omega >= OMEGA_CUTOFFS["small"]:
        return "small"
    return "negligible"


def effect_sizes(chi2: float, n: float, r: int, c: int) -> EffectSizes:
    """Cohen's omega, Cramer's V and (for 2x2) phi from a chi-squared value."""
    if not (chi2 >= 0) or math.isinf(chi2):
        raise InvalidDomain(f"chi2 must be finite and >= 0, got {chi2}")
    if not (n >= 1):
        raise InvalidDomain(f"n must be >= 1, got {n}")
    if r < 2 or c < 2:
        raise InvalidDomain(f"table must be at least 2x2, got {r}x{c}")
    omega = math.sqrt(chi2 / n)
    v = math.sqrt(chi2 / (n * min(r - 1, c - 1)))
    phi = omega if (r == 2 and c == 2) else None
    return EffectSizes(omega=omega, cramers_v=v, phi=phi)


def chi2_power(query: PowerQuery) -> float:
    """Power of the level-alpha chi-squared test when the true effect is omega.

    The statistic is noncentral chi-squared with noncentrality n * omega**2.
    """
    if query.omega == 0.0:
        return query.alpha
    crit = chi2_isf(float(query.alpha), int(query.df))
    lam = query.n * query.omega ** 2
    return 1.0 - noncentral_chi2_cdf(crit, int(query.df), lam)


def required_n(omega: float, df: int, alpha: float, target_power: float, tol: float = 0.01) -> float:
    """Smallest (real) sample size whose power reaches ``target_power``.

    Bisection to within ``tol``; the returned n always satisfies the target.
    """
    if not (0.0 < target_power < 1.0):
        raise InvalidDomain(f"target power must lie in (0, 1), got {target_power}")
    if not (omega > 0.0):
        raise InvalidDomain(f"omega must be > 0, got {omega}")
    PowerQuery(omega, 1.0, df, alpha)  # validates alpha and df
    if target_power <= alpha:
        raise Unachievable(f"target power {target_power} does not exceed alpha {alpha}")

    def power_at(n):
        return chi2_power(PowerQuery(omega, n, df, alpha))

    lo, hi = 0.0, 1.0
    while power_at(hi) < target_power:
        lo, hi = hi, hi * 2.0
        if hi > 1e15:
            raise Unachievable("required sample size is unbounded")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid > 0 and power_at(mid) >= target_power:
            hi = mid
        else:
            lo = mid
    return hi
