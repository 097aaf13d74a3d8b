"""Counting statistics shared by every other module.

Probabilities and mean photon numbers are plain floats; the functions
here validate their domains instead of wrapping them in value types.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError, UndefinedVisibilityError

__all__ = [
    "CountPair",
    "poisson_pmf",
    "poisson_tail_mass",
    "binary_entropy",
    "click_probability",
    "visibility",
]


@dataclass(frozen=True)
class CountPair:
    """Mean counts per window at the constructive/destructive ports."""

    constructive: float
    destructive: float

    def __post_init__(self):
        if self.constructive < 0 or self.destructive < 0:
            raise DomainError("counts must be non-negative")


def poisson_pmf(n: int, mean_photons: float) -> float:
    """P(N = n) for N ~ Poisson(mean_photons): e^-x x^n / n!.

    Evaluated in log space, stable for n up to at least 20 and means
    up to 1.
    """
    if n < 0 or int(n) != n:
        raise DomainError(f"photon number must be a non-negative integer, got {n}")
    if mean_photons < 0:
        raise DomainError(f"mean photon number must be non-negative, got {mean_photons}")
    n = int(n)
    if mean_photons == 0.0:
        return 1.0 if n == 0 else 0.0
    return math.exp(n * math.log(mean_photons) - mean_photons - math.lgamma(n + 1))


def poisson_tail_mass(cutoff: int, mean_photons: float) -> float:
    """P(N > cutoff), the mass truncated when summing the pmf to ``cutoff``.

    Returned explicitly so callers can build one-sided bounds instead of
    silently dropping the tail.
    """
    if cutoff < 0:
        raise DomainError("cutoff must be non-negative")
    kept = math.fsum(poisson_pmf(n, mean_photons) for n in range(cutoff + 1))
    return max(0.0, 1.0 - kept)


def binary_entropy(p: float) -> float:
    """Binary entropy h2(p) in bits, with h2(0) = h2(1) = 0 by continuity."""
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"probability must lie in [0, 1], got {p}")
    if p == 0.0 or p == 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def click_probability(arriving: float, dark: float) -> float:
    """Threshold-detector click probability: 1 - (1-dark) e^-arriving."""
    if arriving < 0:
        raise DomainError(f"arriving intensity must be non-negative, got {arriving}")
    if not 0.0 <= dark <= 1.0:
        raise DomainError(f"dark-count probability must lie in [0, 1], got {dark}")
    # -expm1 keeps precision when both terms are tiny.
    return -math.expm1(-arriving) + dark * math.exp(-arriving)


def visibility(counts: CountPair) -> float:
    """Interference visibility (C - D) / (C + D) from mean counts.

    Clamped into [0, 1] when destructive <= constructive; an inverted
    pair returns the negative value unclamped so the caller can decide.
    """
    total = counts.constructive + counts.destructive
    if total <= 0.0:
        raise UndefinedVisibilityError("visibility undefined for zero total counts")
    v = (counts.constructive - counts.destructive) / total
    if counts.destructive <= counts.constructive:
        return min(1.0, max(0.0, v))
    return v
