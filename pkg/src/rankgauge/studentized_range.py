"""Critical values of the Studentized range with known standard deviations.

The statistic is ``max_{i<j} |Y_i - Y_j| / sqrt(s_i^2 + s_j^2)`` for
independent centred Gaussians ``Y_i`` with standard deviations ``s_i``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy import integrate, optimize

from . import rng
from .errors import ConvergenceFailure, InvalidInput, TooFewSamples

DEFAULT_B = 100_000
MIN_B = 1000


class QuantileMethod(str, Enum):
    MONTE_CARLO = "mc"
    EXACT_EQUAL_SIGMA = "exact"
    AUTO = "auto"


@dataclass(frozen=True)
class QuantileRequest:
    sigma: tuple[float, ...]
    alpha: float
    B: int = DEFAULT_B
    seed: int = 0
    method: QuantileMethod = QuantileMethod.AUTO

    def __post_init__(self):
        object.__setattr__(self, "sigma", tuple(float(s) for s in self.sigma))
        object.__setattr__(self, "method", QuantileMethod(self.method))
        if not 0 < self.alpha < 1:
            raise InvalidInput(f"alpha must lie in (0, 1), got {self.alpha}")
        if any(not s > 0 for s in self.sigma):
            raise InvalidInput("sigma must be strictly positive")
        if self.method is QuantileMethod.MONTE_CARLO and self.B < MIN_B:
            raise TooFewSamples(f"need B >= {MIN_B} Monte-Carlo draws, got {self.B}")
        if self.method is QuantileMethod.EXACT_EQUAL_SIGMA and not _all_equal(self.sigma):
            raise InvalidInput("exact quantile requires equal standard deviations")


def _all_equal(sigma) -> bool:
    return len(set(sigma)) <= 1


def upper_order_index(alpha: float, B: int) -> int:
    """0-based index of the order statistic of rank ceil((1 - alpha) B)."""
    k = math.ceil(round((1.0 - alpha) * B, 9))
    return min(max(k, 1), B) - 1


def _block_statistic(task) -> np.ndarray:
    sigma, seed, b, start, stop = task
    z = rng.stream(seed, rng.TAG_QUANTILE, b).standard_normal((stop - start, sigma.size))
    y = z * sigma
    w = np.zeros(stop - start)
    for i in range(sigma.size - 1):
        scale = np.sqrt(sigma[i] ** 2 + sigma[i + 1:] ** 2)
        d = np.abs(y[:, i:i + 1] - y[:, i + 1:]) / scale
        np.maximum(w, d.max(axis=1), out=w)
    return w


class StudentizedRangeSample:
    """A sorted Monte-Carlo sample of the statistic, reusable across levels.

    Holding one sample and reading several quantiles from it gives common
    random numbers across ``alpha``, so the quantile is monotone in ``alpha``.
    """

    def __init__(self, sigma, B: int = DEFAULT_B, seed: int = 0, workers: int | None = None):
        sigma = np.asarray(sigma, dtype=float).ravel()
        if B < MIN_B:
            raise TooFewSamples(f"need B >= {MIN_B} Monte-Carlo draws, got {B}")
        if np.any(sigma <= 0):
            raise InvalidInput("sigma must be strictly positive")
        self.sigma, self.B, self.seed = sigma, int(B), int(seed)
        if sigma.size < 2:
            self.values = np.zeros(self.B)
            return
        tasks = [(sigma, self.seed, b, s, e) for b, s, e in rng.blocks(self.B)]
        self.values = np.sort(np.concatenate(rng.pmap(_block_statistic, tasks, workers)))

    def quantile(self, alpha: float) -> float:
        if self.sigma.size < 2:
            return 0.0
        return float(self.values[upper_order_index(alpha, self.B)])

    def std_error(self, alpha: float) -> float:
        """Rough Monte-Carlo standard error of the quantile (density via spacing)."""
        if self.sigma.size < 2:
            return 0.0
        k = upper_order_index(alpha, self.B)
        h = max(int(math.sqrt(self.B)), 1)
        lo, hi = self.values[max(k - h, 0)], self.values[min(k + h, self.B - 1)]
        density = (min(k + h, self.B - 1) - max(k - h, 0)) / self.B / max(hi - lo, 1e-300)
        return math.sqrt(alpha * (1 - alpha) / self.B) / density


def quantile_mc(req: QuantileRequest, workers: int | None = None) -> float:
    """Monte-Carlo quantile; deterministic given ``req.seed``."""
    if req.B < MIN_B:
        raise TooFewSamples(f"need B >= {MIN_B} Monte-Carlo draws, got {req.B}")
    return StudentizedRangeSample(req.sigma, req.B, req.seed, workers).quantile(req.alpha)


_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def _pdf(z: float) -> float:
    return _INV_SQRT_2PI * math.exp(-0.5 * z * z)


def _cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / _SQRT2)


def range_cdf(w: float, n: int) -> float:
    """P(range of n iid standard normals < w)."""
    if w <= 0:
        return 0.0

    def integrand(z):
        return _pdf(z) * (_cdf(z) - _cdf(z - w)) ** (n - 1)

    # the integrand lives on roughly [-9, 9 + w]
    val, _ = integrate.quad(integrand, -9.0, 9.0 + w, epsabs=1e-10, epsrel=1e-10, limit=200, points=[0.0, w])
    return n * val


@lru_cache(maxsize=4096)
def quantile_exact_equal_sigma(n: int, alpha: float) -> float:
    """Exact quantile for equal standard deviations.

    The statistic equals the range of ``n`` iid standard normals over sqrt(2).
    """
    if not 0 < alpha < 1:
        raise InvalidInput(f"alpha must lie in (0, 1), got {alpha}")
    if n < 2:
        return 0.0
    target = 1.0 - alpha
    hi = 2.0
    while range_cdf(hi, n) < target:
        hi *= 2
        if hi > 1e3:
            raise ConvergenceFailure("could not bracket the range quantile")
    try:
        w = optimize.bisect(lambda x: range_cdf(x, n) - target, 0.0, hi, xtol=1e-8, maxiter=200)
    except (RuntimeError, ValueError) as exc:
        raise ConvergenceFailure(str(exc)) from exc
    return w / math.sqrt(2.0)


def critical_value(req: QuantileRequest, workers: int | None = None) -> float:
    """Dispatch on ``req.method``; AUTO uses quadrature when all sigma agree."""
    if len(req.sigma) < 2:
        return 0.0
    method = req.method
    if method is QuantileMethod.AUTO:
        method = QuantileMethod.EXACT_EQUAL_SIGMA if _all_equal(req.sigma) else QuantileMethod.MONTE_CARLO
    if method is QuantileMethod.EXACT_EQUAL_SIGMA:
        return quantile_exact_equal_sigma(len(req.sigma), float(req.alpha))
    return quantile_mc(req, workers)


class CriticalValues:
    """Quantile lookup ``alpha -> q`` for one sigma vector.

    Exact for equal sigma, otherwise backed by a single shared Monte-Carlo
    sample so repeated calls are cheap and monotone in ``alpha``.
    """

    def __init__(self, sigma, B: int = DEFAULT_B, seed: int = 0, method="auto", workers: int | None = None):
        self.sigma = np.asarray(sigma, dtype=float).ravel()
        method = QuantileMethod(method)
        if method is QuantileMethod.AUTO:
            method = QuantileMethod.EXACT_EQUAL_SIGMA if _all_equal(self.sigma) else QuantileMethod.MONTE_CARLO
        if method is QuantileMethod.EXACT_EQUAL_SIGMA and not _all_equal(self.sigma):
            raise InvalidInput("exact quantile requires equal standard deviations")
        self.method = method
        self._sample = None
        if method is QuantileMethod.MONTE_CARLO and self.sigma.size >= 2:
            self._sample = StudentizedRangeSample(self.sigma, B, seed, workers)

    def __call__(self, alpha: float) -> float:
        if not 0 < alpha < 1:
            raise InvalidInput(f"alpha must lie in (0, 1), got {alpha}")
        if self.sigma.size < 2:
            return 0.0
        if self._sample is not None:
            return self._sample.quantile(alpha)
        return quantile_exact_equal_sigma(self.sigma.size, float(alpha))
