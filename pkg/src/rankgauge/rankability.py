"""Rankability of a set of means and its lower confidence bound."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import RankCiResult, RankInterval, set_rank_bounds
from .errors import TooFewItems


def _normalised_width(lower, upper) -> float:
    lower = np.asarray(lower, dtype=np.int64)
    upper = np.asarray(upper, dtype=np.int64)
    n = lower.size
    if n < 2:
        raise TooFewItems("rankability needs at least two items")
    return float(np.sum(upper - lower)) / (n * (n - 1))


def true_rankability(mu) -> float:
    """One minus the normalised total width of the true set-ranks."""
    lo, up = set_rank_bounds(mu)
    return 1.0 - _normalised_width(lo, up)


@dataclass(frozen=True)
class RankabilityEstimate:
    estimate: float
    ci_lower: float
    ci_upper: float = 1.0

    @property
    def efficiency(self) -> float:
        """Average normalised interval length, ``1 - estimate`` (smaller is better)."""
        return 1.0 - self.estimate


def estimated_rankability(intervals: Sequence[RankInterval] | RankCiResult) -> RankabilityEstimate:
    """Rankability implied by simultaneous rank intervals.

    At joint level ``1 - alpha`` the estimate falls below the true rankability
    with probability at least ``1 - alpha``, so ``[estimate, 1]`` is a
    ``1 - alpha`` confidence interval. Intervals that are not simultaneous
    carry no such guarantee.
    """
    if isinstance(intervals, RankCiResult):
        lower, upper = intervals.lower, intervals.upper
    else:
        lower = [iv.lower for iv in intervals]
        upper = [iv.upper for iv in intervals]
    r = 1.0 - _normalised_width(lower, upper)
    return RankabilityEstimate(r, r, 1.0)


def efficiency(lower, upper) -> float:
    return _normalised_width(lower, upper)


def pair_disagreement(mu) -> float:
    """Share of ordered pairs ``i != j`` whose set-ranks intersect, by enumeration.

    Equals ``1 - true_rankability(mu)``: two items get overlapping set-ranks
    exactly when their means tie.
    """
    lo, up = set_rank_bounds(mu)
    n = lo.size
    if n < 2:
        raise TooFewItems("rankability needs at least two items")
    hits = 0
    for i in range(n):
        for j in range(n):
            if i != j and lo[i] <= up[j] and lo[j] <= up[i]:
                hits += 1
    return hits / (n * (n - 1))
