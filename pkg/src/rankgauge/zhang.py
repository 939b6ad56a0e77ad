"""Monte-Carlo simultaneous rank intervals in the style of Zhang et al.

Pointwise rank intervals at level ``1 - beta`` come from type-3 quantiles of
simulated ranks; ``beta`` is then bisected over ``(0, alpha)`` so that the
share of simulated rank vectors falling entirely inside the pointwise
intervals is at least ``1 - alpha``. The same simulated matrix serves both
purposes, which makes the coverage estimate optimistic. That is the published
algorithm and it is kept as is.

Two routes compute the estimated coverage:

* a literal one that checks every simulated column (:func:`joint_coverage`),
* :class:`RankSimulation`, which compresses the matrix into three small
  histograms from which the coverage at any ``beta`` is read off exactly.

The rescaler needs thousands of replays of the bisection per dataset, which
only the compressed route makes affordable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import rng
from .core import Method, Observations, RankCiResult, RankInterval, build_result
from .errors import EmptyInput, InvalidInput, ResolutionExhausted

MIN_K = 1000
_CHUNK = 65536


@dataclass(frozen=True)
class ZhangConfig:
    alpha: float
    K: int = 10_000
    precision: float = 1e-6
    maxiter: int = 50
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise InvalidInput(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.K < MIN_K:
            raise InvalidInput(f"K must be >= {MIN_K}, got {self.K}")
        if not self.precision > 0:
            raise InvalidInput("precision must be > 0")
        if self.maxiter < 1:
            raise InvalidInput("maxiter must be >= 1")


# ---------------------------------------------------------------------------
# simulation and ranks


def simulate_rows(y, sigma, K: int, seed: int, key: tuple[int, ...] = ()) -> np.ndarray:
    """``K x n`` array whose row ``k`` is ``y + sigma * Z_k``.

    Rows are generated in fixed blocks, each from its own keyed stream.
    """
    y = np.asarray(y, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    out = np.empty((K, y.size))
    for b, start, stop in rng.blocks(K):
        z = rng.stream(seed, rng.TAG_ZHANG_SIM, *key, b).standard_normal((stop - start, y.size))
        out[start:stop] = y + sigma * z
    return out


def simulate_matrix(obs: Observations, K: int, seed: int) -> np.ndarray:
    """``n x K`` matrix of simulated samples (column ``k`` is one draw)."""
    if K < 1:
        raise InvalidInput("K must be >= 1")
    return simulate_rows(obs.y, obs.sigma, K, seed).T


def column_ranks(rows: np.ndarray) -> np.ndarray:
    """1-based ranks within each row of a ``K x n`` array; ties broken by index."""
    rows = np.asarray(rows)
    K, n = rows.shape
    order = np.argsort(rows, axis=1)
    if n > 1 and np.any(np.diff(np.take_along_axis(rows, order, axis=1), axis=1) == 0):
        order = np.argsort(rows, axis=1, kind="stable")
    ranks = np.empty((K, n), dtype=np.int16 if n < 32000 else np.int32)
    np.put_along_axis(ranks, order, np.arange(1, n + 1, dtype=ranks.dtype)[None, :], axis=1)
    return ranks


# ---------------------------------------------------------------------------
# type-3 quantiles


def type3_index(K: int, p: float) -> int:
    """1-based order-statistic index of the Hyndman-Fan type-3 quantile."""
    h = K * p - 0.5
    j = math.floor(h)
    g = h - j
    idx = j if (g == 0 and j % 2 == 0) else j + 1
    return min(max(idx, 1), K)


def quantile_type3(sorted_vals, p: float):
    """Nearest-order-statistic quantile with ties to the even index."""
    if len(sorted_vals) == 0:
        raise EmptyInput("quantile of an empty sample")
    if not 0 <= p <= 1:
        raise InvalidInput(f"probability must lie in [0, 1], got {p}")
    return sorted_vals[type3_index(len(sorted_vals), p) - 1]


def _pointwise_from_ranks(ranks: np.ndarray, beta: float) -> tuple[np.ndarray, np.ndarray]:
    K = ranks.shape[0]
    s = np.sort(ranks, axis=0)
    return s[type3_index(K, beta / 2) - 1].astype(np.int64), s[type3_index(K, 1 - beta / 2) - 1].astype(np.int64)


def spiegelhalter_pointwise(obs: Observations, beta: float, sim: np.ndarray) -> list[RankInterval]:
    """Pointwise ``1 - beta`` rank intervals (sorted order of ``obs``).

    ``sim`` is the ``n x K`` matrix from :func:`simulate_matrix`.
    """
    if not 0 <= beta <= 1:
        raise InvalidInput(f"beta must lie in [0, 1], got {beta}")
    lo, hi = _pointwise_from_ranks(column_ranks(np.asarray(sim).T), beta)
    return [RankInterval(int(a), int(b)) for a, b in zip(lo, hi)]


def joint_coverage(ranks: np.ndarray, lower, upper) -> float:
    """Share of simulated rank vectors lying inside every interval."""
    inside = (ranks >= np.asarray(lower)) & (ranks <= np.asarray(upper))
    return float(np.count_nonzero(inside.all(axis=1))) / ranks.shape[0]


# ---------------------------------------------------------------------------
# the beta bisection


@dataclass(frozen=True)
class BetaSearch:
    beta: float
    coverage: float
    iterations: int


def bisect_beta(alpha: float, coverage_at: Callable[[float], float], precision: float = 1e-6, maxiter: int = 50) -> BetaSearch:
    """Largest evaluated ``beta`` in ``(0, alpha)`` whose coverage is ``>= 1 - alpha``.

    Stops when the bracket is narrower than ``precision`` or after ``maxiter``
    evaluations. Falls back to ``beta = 0`` (min/max intervals) if no
    evaluated point passes.
    """
    beta1, beta2 = 0.0, alpha
    cov1 = None
    counter = 0
    while abs(beta1 - beta2) > precision and counter < maxiter:
        beta = (beta1 + beta2) / 2
        cov = coverage_at(beta)
        if cov >= 1 - alpha:
            beta1, cov1 = beta, cov
        else:
            beta2 = beta
        counter += 1
    if cov1 is None:
        cov1 = coverage_at(0.0)
        if cov1 < 1 - alpha:
            raise ResolutionExhausted("no beta reaches the target coverage on the simulated matrix")
    return BetaSearch(beta1, cov1, counter)


# ---------------------------------------------------------------------------
# compressed simulation


def _suffix_table(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    vals, counts = np.unique(values, return_counts=True)
    suffix = np.concatenate([np.cumsum(counts[::-1])[::-1], [0]])
    return vals, suffix


class RankSimulation:
    """Exact compressed summary of a ``K x n`` matrix of simulated ranks.

    With ``C_i(r)`` the number of columns where item ``i`` has rank ``<= r``,
    the type-3 bounds at order-statistic indices ``(a, b)`` are
    ``lo_i = min{r: C_i(r) >= a}`` and ``hi_i = min{r: C_i(r) >= b}``. A
    column ``k`` lies inside all of them iff ``a <= A_k = min_i C_i(r_ki)`` and
    ``b >= B_k = 1 + max_i C_i(r_ki - 1)``. Along the bisection path
    ``K - b - a`` is always in ``{-1, 0, 1}``, so three one-dimensional
    histograms of ``min(A - ., K - B - .)`` answer every coverage query.
    """

    def __init__(self, ranks: np.ndarray):
        ranks = np.asarray(ranks)
        K, n = ranks.shape
        self.K, self.n = K, n
        offs = (np.arange(n) * (n + 1))[None, :]
        counts = np.zeros(n * (n + 1), dtype=np.int64)
        for s in range(0, K, _CHUNK):
            counts += np.bincount((ranks[s:s + _CHUNK] + offs).ravel(), minlength=n * (n + 1))
        self.cum = np.cumsum(counts.reshape(n, n + 1), axis=1)
        flat = self.cum.ravel()
        A = np.empty(K, dtype=np.int64)
        B = np.empty(K, dtype=np.int64)
        for s in range(0, K, _CHUNK):
            idx = ranks[s:s + _CHUNK].astype(np.int64) + offs
            A[s:s + _CHUNK] = flat[idx].min(axis=1)
            B[s:s + _CHUNK] = flat[idx - 1].max(axis=1) + 1
        self._tables = {
            0: _suffix_table(np.minimum(A, K - B)),
            1: _suffix_table(np.minimum(A, K - B - 1)),
            -1: _suffix_table(np.minimum(A - 1, K - B)),
        }

    @classmethod
    def from_data(cls, y, sigma, K: int, seed: int, key: tuple[int, ...] = ()) -> "RankSimulation":
        return cls(column_ranks(simulate_rows(y, sigma, K, seed, key)))

    def _count_at_least(self, table: int, c: int) -> int:
        vals, suffix = self._tables[table]
        return int(suffix[np.searchsorted(vals, c, side="left")])

    def indices(self, beta: float) -> tuple[int, int]:
        return type3_index(self.K, beta / 2), type3_index(self.K, 1 - beta / 2)

    def covered(self, beta: float) -> int:
        a, b = self.indices(beta)
        d = (self.K - b) - a
        if d == 0:
            return self._count_at_least(0, a)
        if d == 1:
            return self._count_at_least(1, a)
        if d == -1:
            return self._count_at_least(-1, a - 1)
        raise RuntimeError(f"unexpected quantile index pair ({a}, {b}) for K={self.K}")

    def coverage(self, beta: float) -> float:
        return self.covered(beta) / self.K

    def bounds(self, beta: float) -> tuple[np.ndarray, np.ndarray]:
        """Pointwise bounds at level ``1 - beta`` in item order."""
        a, b = self.indices(beta)
        lo = np.argmax(self.cum[:, 1:] >= a, axis=1) + 1
        hi = np.argmax(self.cum[:, 1:] >= b, axis=1) + 1
        return lo, hi

    def simultaneous(self, alpha: float, precision: float = 1e-6, maxiter: int = 50) -> tuple[np.ndarray, np.ndarray, BetaSearch]:
        search = bisect_beta(alpha, self.coverage, precision, maxiter)
        lo, hi = self.bounds(search.beta)
        return lo, hi, search


# ---------------------------------------------------------------------------
# public entry points


def zhang_simultaneous_cis(
    obs: Observations,
    cfg: ZhangConfig,
    *,
    alpha_nominal: float | None = None,
) -> RankCiResult:
    """Simultaneous rank intervals at joint level ``1 - cfg.alpha``."""
    if obs.n == 1:
        lo = hi = np.ones(1, dtype=np.int64)
        search = BetaSearch(0.0, 1.0, 0)
    else:
        sim = RankSimulation.from_data(obs.y, obs.sigma, cfg.K, cfg.seed)
        lo, hi, search = sim.simultaneous(cfg.alpha, cfg.precision, cfg.maxiter)
    return build_result(
        obs,
        lo,
        hi,
        method=Method.ZHANG,
        alpha_nominal=cfg.alpha if alpha_nominal is None else alpha_nominal,
        alpha_effective=cfg.alpha,
        seed=cfg.seed,
        beta_used=search.beta,
        coverage_estimate=search.coverage,
        extra={"K": cfg.K, "iterations": search.iterations},
    )


def zhang_literal(y, sigma, alpha: float, sim_rows: np.ndarray, precision: float = 1e-6, maxiter: int = 50):
    """Column-by-column route over an explicit ``K x n`` simulated matrix.

    Slow; kept as an independent check of :class:`RankSimulation`.
    Returns ``(lower, upper, BetaSearch)`` in item order.
    """
    ranks = column_ranks(sim_rows)

    def coverage_at(beta):
        lo, hi = _pointwise_from_ranks(ranks, beta)
        return joint_coverage(ranks, lo, hi)

    search = bisect_beta(alpha, coverage_at, precision, maxiter)
    lo, hi = _pointwise_from_ranks(ranks, search.beta)
    return lo, hi, search
