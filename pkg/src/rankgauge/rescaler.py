"""Coverage estimation, worst-case rescaling of the level, sigma orderings.

Coverage is always estimated with common random numbers: a given seed fixes
the simulated datasets (and, for the Monte-Carlo method, the simulated
matrices), so the estimated coverage is a deterministic step function of the
level and can be bisected reliably.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np
from scipy import stats

from . import rng
from .core import Method, set_rank_bounds
from .errors import InvalidInput, ResolutionExhausted
from .studentized_range import DEFAULT_B, CriticalValues
from .tukey import pair_scale, rank_bounds
from .zhang import MIN_K, RankSimulation

DEFAULT_R = 10_000
VERIFY_R = 100_000
MIN_R = 100
_ZHANG_TASK = 64


@dataclass(frozen=True)
class MethodSettings:
    """Knobs of the two interval methods that coverage runs need."""

    K: int = 10_000
    precision: float = 1e-6
    maxiter: int = 50
    B: int = DEFAULT_B
    quantile_seed: int = 0

    def __post_init__(self):
        if self.K < MIN_K:
            raise InvalidInput(f"K must be >= {MIN_K}, got {self.K}")


@dataclass(frozen=True)
class CoverageEstimate:
    p_hat: float
    R: int
    std_error: float
    seed: int
    level: float = float("nan")

    @classmethod
    def from_hits(cls, hits: int, R: int, seed: int, level: float = float("nan")) -> "CoverageEstimate":
        p = hits / R
        return cls(p, R, math.sqrt(p * (1 - p) / R), seed, level)


# ---------------------------------------------------------------------------
# simulated data and per-replicate hit functions


def simulate_data(mu, sigma, R: int, seed: int) -> np.ndarray:
    """``R x n`` datasets ``y ~ N(mu, diag(sigma^2))`` from keyed blocks."""
    mu = np.asarray(mu, dtype=float)
    sigma = np.broadcast_to(np.asarray(sigma, dtype=float), mu.shape)
    out = np.empty((R, mu.size))
    for b, start, stop in rng.blocks(R):
        z = rng.stream(seed, rng.TAG_COVERAGE_DATA, b).standard_normal((stop - start, mu.size))
        out[start:stop] = mu + sigma * z
    return out


def tukey_critical_q(Y, sigma, lower, upper) -> np.ndarray:
    """Smallest critical value at which each dataset's Tukey intervals cover.

    For dataset ``r`` the intervals contain every ``[lower_i, upper_i]`` iff
    ``q >= q*_r``. ``L_i <= l_i`` needs the ``l_i``-th largest of
    ``d_ij = (y_i - y_j)/s_ij`` to be ``<= q``; ``U_i >= u_i`` needs the same of
    the ``(n - u_i + 1)``-th largest of ``-d_ij``.
    """
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    n = Y.shape[1]
    lower = np.asarray(lower, dtype=np.int64)
    upper = np.asarray(upper, dtype=np.int64)
    scale = pair_scale(sigma)
    out = np.empty(Y.shape[0])
    eye = np.eye(n, dtype=bool)
    rows = np.arange(n)
    for s in range(0, Y.shape[0], 2048):
        y = Y[s:s + 2048]
        d = (y[:, :, None] - y[:, None, :]) / scale
        d[:, eye] = -np.inf
        desc = -np.sort(-d, axis=2)
        lo_need = desc[:, rows, lower - 1]
        negd = -d
        negd[:, eye] = -np.inf
        desc_neg = -np.sort(-negd, axis=2)
        up_need = desc_neg[:, rows, n - upper]
        out[s:s + 2048] = np.maximum(lo_need.max(axis=1), up_need.max(axis=1))
    return out


def _tukey_hits(task) -> np.ndarray:
    Y, sigma, lower, upper, qs = task
    hits = np.empty((Y.shape[0], len(qs)), dtype=bool)
    for k, q in enumerate(qs):
        L, U = rank_bounds(Y, sigma, q)
        hits[:, k] = np.all((L <= lower) & (U >= upper), axis=1)
    return hits


def _zhang_hits(task) -> np.ndarray:
    Y, first, sigma, lower, upper, levels, settings, seed = task
    hits = np.empty((Y.shape[0], len(levels)), dtype=bool)
    for r in range(Y.shape[0]):
        sim = RankSimulation.from_data(Y[r], sigma, settings.K, seed, key=(rng.TAG_ZHANG_REPLICATE, first + r))
        for k, level in enumerate(levels):
            lo, hi, _ = sim.simultaneous(level, settings.precision, settings.maxiter)
            hits[r, k] = np.all((lo <= lower) & (hi >= upper))
    return hits


def _zhang_build(task) -> list[RankSimulation]:
    Y, first, sigma, settings, seed = task
    return [
        RankSimulation.from_data(Y[r], sigma, settings.K, seed, key=(rng.TAG_ZHANG_REPLICATE, first + r))
        for r in range(Y.shape[0])
    ]


def _true_bounds(mu, true_ranks):
    if true_ranks is None:
        return set_rank_bounds(mu)
    if isinstance(true_ranks, tuple) and len(true_ranks) == 2 and np.ndim(true_ranks[0]) == 1:
        lo, up = true_ranks
        return np.asarray(lo, dtype=np.int64), np.asarray(up, dtype=np.int64)
    r = np.asarray(true_ranks, dtype=np.int64)
    return r, r


def coverage_curve(
    mu,
    sigma,
    levels: Sequence[float],
    method: Method | str,
    R: int = DEFAULT_R,
    seed: int = 0,
    settings: MethodSettings | None = None,
    true_ranks=None,
    workers: int | None = None,
) -> list[CoverageEstimate]:
    """Simultaneous coverage at several levels on one shared replicate set."""
    method = Method.parse(method)
    settings = settings or MethodSettings()
    mu = np.asarray(mu, dtype=float)
    sigma = np.broadcast_to(np.asarray(sigma, dtype=float), mu.shape).copy()
    if R < MIN_R:
        raise InvalidInput(f"need R >= {MIN_R} replicates, got {R}")
    levels = [float(a) for a in levels]
    lower, upper = _true_bounds(mu, true_ranks)
    Y = simulate_data(mu, sigma, R, seed)
    if method is Method.TUKEY:
        crit = CriticalValues(sigma, settings.B, settings.quantile_seed, workers=workers)
        qs = [crit(a) for a in levels]
        tasks = [(Y[s:e], sigma, lower, upper, qs) for _, s, e in rng.blocks(R, 2048)]
        hits = np.concatenate(rng.pmap(_tukey_hits, tasks, workers))
    else:
        tasks = [
            (Y[s:e], s, sigma, lower, upper, levels, settings, seed)
            for _, s, e in rng.blocks(R, _ZHANG_TASK)
        ]
        hits = np.concatenate(rng.pmap(_zhang_hits, tasks, workers))
    counts = hits.sum(axis=0)
    return [CoverageEstimate.from_hits(int(c), R, seed, a) for c, a in zip(counts, levels)]


def coverage_at(mu, sigma, level: float, method, R: int = DEFAULT_R, seed: int = 0, settings=None, true_ranks=None, workers=None) -> CoverageEstimate:
    """Estimated probability that every interval contains its true set-rank.

    True set-ranks come from ``mu`` (tie-aware) unless ``true_ranks`` is given,
    either as one rank per item or as a ``(lower, upper)`` pair.
    """
    return coverage_curve(mu, sigma, [level], method, R, seed, settings, true_ranks, workers)[0]


# ---------------------------------------------------------------------------
# sigma orderings


class OrderingKind(str, Enum):
    ASCENDING = "ascending"
    TREE_MIDDLE_MAX = "tree_middle_max"
    TREE_MIDDLE_MIN = "tree_middle_min"
    CUSTOM = "custom"


@dataclass(frozen=True)
class SigmaOrdering:
    """``permutation[k]`` is the index of the sigma placed at rank position ``k``."""

    kind: OrderingKind
    permutation: tuple[int, ...]

    def __post_init__(self):
        if sorted(self.permutation) != list(range(len(self.permutation))):
            raise InvalidInput("permutation must be a bijection")

    def apply(self, sigma) -> np.ndarray:
        return np.asarray(sigma, dtype=float)[list(self.permutation)]


def _tree_positions(n: int) -> list[int]:
    # n-1, 0, n-2, 1, ... : filling from the ends inwards, last slot is ceil(n/2)-1
    out, lo, hi = [], 0, n - 1
    take_hi = True
    while lo <= hi:
        if take_hi:
            out.append(hi)
            hi -= 1
        else:
            out.append(lo)
            lo += 1
        take_hi = not take_hi
    return out


def sigma_ordering(sigma, kind: OrderingKind | str) -> SigmaOrdering:
    kind = OrderingKind(kind)
    sigma = np.asarray(sigma, dtype=float)
    n = sigma.size
    asc = np.argsort(sigma, kind="stable")
    if kind is OrderingKind.ASCENDING:
        return SigmaOrdering(kind, tuple(int(i) for i in asc))
    if kind is OrderingKind.CUSTOM:
        raise InvalidInput("custom orderings are built directly from a permutation")
    source = asc if kind is OrderingKind.TREE_MIDDLE_MAX else asc[::-1]
    perm = [0] * n
    for pos, idx in zip(_tree_positions(n), source):
        perm[pos] = int(idx)
    return SigmaOrdering(kind, tuple(perm))


def worst_case_sigma_ordering(sigma) -> SigmaOrdering:
    """Smallest sigmas at both extremes, largest in the middle.

    Values ascend up to position ceil(n/2) and descend after it. Equal sigmas
    give the identity.
    """
    sigma = np.asarray(sigma, dtype=float)
    if sigma.size == 0:
        raise InvalidInput("empty sigma vector")
    if np.all(sigma == sigma[0]):
        return SigmaOrdering(OrderingKind.TREE_MIDDLE_MAX, tuple(range(sigma.size)))
    return sigma_ordering(sigma, OrderingKind.TREE_MIDDLE_MAX)


def brute_force_worst_ordering(sigma, alpha: float, method, R: int = DEFAULT_R, seed: int = 0, settings=None, workers=None):
    """Exhaustive search over the n!/2 orderings (up to reversal), ``n <= 7``.

    Returns ``(SigmaOrdering, CoverageEstimate)`` with the smallest coverage at
    the worst-case means (all zero, ranks 1..n).
    """
    sigma = np.asarray(sigma, dtype=float)
    n = sigma.size
    if n > 7:
        raise InvalidInput("exhaustive ordering search is limited to n <= 7")
    best = None
    ident = np.arange(1, n + 1)
    for perm in itertools.permutations(range(n)):
        if perm > perm[::-1]:
            continue
        est = coverage_at(np.zeros(n), sigma[list(perm)], alpha, method, R, seed, settings, ident, workers)
        if best is None or est.p_hat < best[1].p_hat:
            best = (SigmaOrdering(OrderingKind.CUSTOM, tuple(perm)), est)
    return best


# ---------------------------------------------------------------------------
# rescaling


@dataclass(frozen=True)
class RescaleResult:
    alpha_tilde: float
    achieved: CoverageEstimate
    method: Method
    alpha: float
    sigma_arranged: tuple[float, ...] = field(default=())
    steps: int = 0


class WorstCaseCoverage:
    """Estimated coverage ``z -> beta_0(z)`` at the worst-case configuration.

    The replicate datasets (and simulated matrices) are drawn once, so every
    call reuses the same random numbers. For the Monte-Carlo method the
    per-replicate simulations can be built incrementally with :meth:`grow`.
    """

    def __init__(self, sigma, method, R: int = DEFAULT_R, seed: int = 0, settings=None, workers=None, lazy: bool = False):
        self.method = Method.parse(method)
        self.settings = settings or MethodSettings()
        self.sigma = np.asarray(sigma, dtype=float)
        self.R, self.seed = int(R), int(seed)
        self.workers = workers
        n = self.sigma.size
        if R < MIN_R:
            raise InvalidInput(f"need R >= {MIN_R} replicates, got {R}")
        self.truth = np.arange(1, n + 1)
        self._Y = simulate_data(np.zeros(n), self.sigma, self.R, self.seed)
        self._sims: list[RankSimulation] = []
        if self.method is Method.TUKEY:
            self._crit = CriticalValues(self.sigma, self.settings.B, self.settings.quantile_seed, workers=workers)
            self._qstar = np.sort(tukey_critical_q(self._Y, self.sigma, self.truth, self.truth))
        elif not lazy:
            self.grow(self.R)

    @property
    def built(self) -> int:
        return self.R if self.method is Method.TUKEY else len(self._sims)

    def grow(self, upto: int) -> None:
        """Build the Monte-Carlo replicates up to index ``upto`` (exclusive)."""
        upto = min(upto, self.R)
        start = len(self._sims)
        if self.method is Method.TUKEY or upto <= start:
            return
        tasks = [
            (self._Y[start + s:start + e], start + s, self.sigma, self.settings, self.seed)
            for _, s, e in rng.blocks(upto - start, _ZHANG_TASK)
        ]
        self._sims.extend(sim for chunk in rng.pmap(_zhang_build, tasks, self.workers) for sim in chunk)

    def hits(self, z: float) -> int:
        if self.method is Method.TUKEY:
            return int(np.searchsorted(self._qstar, self._crit(z), side="right"))
        if len(self._sims) < self.R:
            self.grow(self.R)
        return self._hits_built(z)

    def _hits_built(self, z: float) -> int:
        total = 0
        for sim in self._sims:
            lo, hi, _ = sim.simultaneous(z, self.settings.precision, self.settings.maxiter)
            total += bool(np.all((lo <= self.truth) & (hi >= self.truth)))
        return total

    def __call__(self, z: float) -> CoverageEstimate:
        return CoverageEstimate.from_hits(self.hits(z), self.R, self.seed, z)


def _infeasible(n, K, p_hat, target, floor):
    return ResolutionExhausted(
        f"worst-case coverage is only {p_hat:.4f} < {target:.4f} even at level 1/K = {floor:.2e}; "
        f"n={n} needs more than K={K} simulated samples (try K >= {10 * K})",
        required_K=10 * K,
    )


def _check_floor(beta0: WorstCaseCoverage, n: int, target: float, floor: float, batch: int = _ZHANG_TASK) -> None:
    # Build in batches; stop as soon as an exact upper bound on the coverage at
    # the resolution floor falls below the target.
    while beta0.built < beta0.R:
        beta0.grow(beta0.built + batch)
        m = beta0.built
        hits = beta0._hits_built(floor)
        upper = 1.0 if hits == m else float(stats.beta.ppf(1 - 1e-4, hits + 1, m - hits))
        if upper < target:
            raise _infeasible(n, beta0.settings.K, hits / m, target, floor)


def arrange_worst_case(sigma) -> np.ndarray:
    return worst_case_sigma_ordering(sigma).apply(sigma)


def rescale_alpha(
    n: int,
    sigma,
    alpha: float,
    method,
    R: int = DEFAULT_R,
    seed: int = 0,
    tol: float | None = None,
    settings: MethodSettings | None = None,
    workers: int | None = None,
    curve: WorstCaseCoverage | None = None,
) -> RescaleResult:
    """Level ``alpha_tilde`` whose worst-case coverage is still ``>= 1 - alpha``.

    Tukey: bisection on ``(alpha, 1)`` with absolute bracket width ``tol``
    (default 1e-4). Monte-Carlo method: geometric bisection on
    ``(1/K, alpha)`` until ``hi/lo <= 1 + tol`` (default 0.01); below ``1/K``
    the method cannot widen its intervals any further, so failing there raises
    :class:`ResolutionExhausted`.
    """
    method = Method.parse(method)
    settings = settings or MethodSettings()
    if not 0 < alpha < 1:
        raise InvalidInput(f"alpha must lie in (0, 1), got {alpha}")
    sigma = np.broadcast_to(np.asarray(sigma, dtype=float), (n,)).copy()
    arranged = arrange_worst_case(sigma)
    beta0 = curve or WorstCaseCoverage(arranged, method, R, seed, settings, workers, lazy=True)
    target = 1 - alpha
    steps = 0

    def ok(z):
        return beta0.hits(z) / beta0.R >= target

    if method is Method.TUKEY:
        tol = 1e-4 if tol is None else tol
        if n < 2:
            return RescaleResult(alpha, beta0(alpha), method, alpha, tuple(arranged), 0)
        lo, hi = alpha, 1.0
        if not ok(lo):
            # already anticonservative at the nominal level; nothing to relax
            return RescaleResult(alpha, beta0(alpha), method, alpha, tuple(arranged), 0)
        while hi - lo > tol:
            mid = (lo + hi) / 2
            if ok(mid):
                lo = mid
            else:
                hi = mid
            steps += 1
    else:
        tol = 0.01 if tol is None else tol
        floor = 1.0 / settings.K
        if n < 2:
            return RescaleResult(alpha, beta0(alpha), method, alpha, tuple(arranged), 0)
        _check_floor(beta0, n, target, floor)
        if ok(alpha):
            return RescaleResult(alpha, beta0(alpha), method, alpha, tuple(arranged), 0)
        if not ok(floor):
            raise _infeasible(n, settings.K, beta0(floor).p_hat, target, floor)
        lo, hi = floor, alpha
        while hi / lo > 1 + tol:
            mid = math.sqrt(lo * hi)
            if ok(mid):
                lo = mid
            else:
                hi = mid
            steps += 1
    return RescaleResult(lo, beta0(lo), method, alpha, tuple(arranged), steps)


def epsilon_sweep(
    mu_base,
    sigma,
    alpha: float,
    grid: Sequence[float],
    method,
    R: int = DEFAULT_R,
    seed: int = 0,
    settings=None,
    workers=None,
    levels: Sequence[float] | None = None,
) -> list[tuple[float, CoverageEstimate]] | list[tuple[float, list[CoverageEstimate]]]:
    """Coverage along means ``eps * mu_base`` with shared random numbers.

    At ``eps = 0`` the items keep the ranks of ``mu_base``. With ``levels``
    given, each grid point returns estimates for all those levels instead of
    just ``alpha``.
    """
    grid = list(grid)
    if not grid:
        raise InvalidInput("empty epsilon grid")
    mu_base = np.asarray(mu_base, dtype=float)
    base_ranks = set_rank_bounds(mu_base)
    out = []
    for eps in grid:
        mu = eps * mu_base
        truth = base_ranks if eps == 0 else None
        ests = coverage_curve(mu, sigma, levels or [alpha], method, R, seed, settings, truth, workers)
        out.append((float(eps), ests if levels else ests[0]))
    return out
