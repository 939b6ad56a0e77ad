"""Domain types, input validation and the tie-aware true-rank oracle."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .errors import DuplicateId, EmptyInput, NonFiniteValue, NonPositiveSigma


class Method(str, Enum):
    TUKEY = "tukey"
    ZHANG = "zhang"

    @classmethod
    def parse(cls, value: "Method | str") -> "Method":
        if isinstance(value, cls):
            return value
        return cls(str(value).strip().lower())


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Observations:
    """Measurements sorted ascending by ``y``.

    ``sort_order[k]`` is the original input index of the item at sorted
    position ``k``. Ties in ``y`` keep input order.
    """

    ids: tuple[str, ...]
    y: np.ndarray
    sigma: np.ndarray
    sort_order: np.ndarray

    @property
    def n(self) -> int:
        return len(self.ids)

    @property
    def original_ids(self) -> tuple[str, ...]:
        out = [""] * self.n
        for pos, orig in enumerate(self.sort_order):
            out[orig] = self.ids[pos]
        return tuple(out)

    def to_original(self, values_sorted: np.ndarray) -> np.ndarray:
        """Reorder a per-item array from sorted order back to input order."""
        out = np.empty_like(values_sorted)
        out[self.sort_order] = values_sorted
        return out

    @classmethod
    def from_arrays(cls, y, sigma, ids: Sequence[str] | None = None) -> "Observations":
        y = np.asarray(y, dtype=float).ravel()
        sigma = np.broadcast_to(np.asarray(sigma, dtype=float), y.shape)
        if ids is None:
            ids = [str(i + 1) for i in range(y.size)]
        return validate_observations(zip(ids, y, sigma))


def validate_observations(raw: Iterable[tuple]) -> Observations:
    """Validate ``(id, y, sigma)`` rows and return sorted :class:`Observations`."""
    rows = list(raw)
    if not rows:
        raise EmptyInput("no observations given")
    ids, ys, sigmas = [], [], []
    seen = set()
    for row in rows:
        ident, y, s = row
        ident = str(ident)
        if ident in seen:
            raise DuplicateId(f"duplicate id {ident!r}")
        seen.add(ident)
        y, s = float(y), float(s)
        if not math.isfinite(y) or not math.isfinite(s):
            raise NonFiniteValue(f"non-finite value for id {ident!r}")
        if s <= 0:
            raise NonPositiveSigma(f"sigma must be > 0 (id {ident!r} has {s})")
        ids.append(ident)
        ys.append(y)
        sigmas.append(s)
    y = np.array(ys)
    order = np.argsort(y, kind="stable")
    order.setflags(write=False)
    return Observations(
        ids=tuple(ids[k] for k in order),
        y=_frozen(y[order]),
        sigma=_frozen(np.array(sigmas)[order]),
        sort_order=order,
    )


@dataclass(frozen=True, order=True)
class SetRank:
    lower: int
    upper: int

    def __post_init__(self):
        if not 1 <= self.lower <= self.upper:
            raise ValueError(f"invalid set-rank [{self.lower}, {self.upper}]")


@dataclass(frozen=True, order=True)
class RankInterval:
    lower: int
    upper: int

    def __post_init__(self):
        if not 1 <= self.lower <= self.upper:
            raise ValueError(f"invalid rank interval [{self.lower}, {self.upper}]")

    def contains(self, other: "SetRank | RankInterval") -> bool:
        return self.lower <= other.lower and other.upper <= self.upper


@dataclass(frozen=True)
class RankCiResult:
    """Simultaneous rank intervals, stored in original input order."""

    method: Method
    alpha_nominal: float
    alpha_effective: float
    ids: tuple[str, ...]
    y: np.ndarray
    sigma: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    position: np.ndarray  # 1-based position of each item in the y-sorted order
    seed: int
    quantile_used: float | None = None
    beta_used: float | None = None
    coverage_estimate: float | None = None
    extra: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.ids)

    @property
    def intervals(self) -> list[RankInterval]:
        return [RankInterval(int(a), int(b)) for a, b in zip(self.lower, self.upper)]


def build_result(obs: Observations, lower_sorted, upper_sorted, **kw) -> RankCiResult:
    """Package sorted-order bounds into a :class:`RankCiResult`."""
    lower = obs.to_original(np.asarray(lower_sorted, dtype=np.int64))
    upper = obs.to_original(np.asarray(upper_sorted, dtype=np.int64))
    position = obs.to_original(np.arange(1, obs.n + 1))
    return RankCiResult(
        ids=obs.original_ids,
        y=obs.to_original(np.asarray(obs.y)),
        sigma=obs.to_original(np.asarray(obs.sigma)),
        lower=lower,
        upper=upper,
        position=position,
        **kw,
    )


def set_rank_bounds(mu) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised set-ranks: arrays ``(l, u)`` with
    ``l_i = 1 + #{j: mu_j < mu_i}`` and ``u_i = n - #{j: mu_j > mu_i}``.

    Uses strict ``>`` in the upper rank so that tied means share one set-rank.
    """
    mu = np.asarray(mu, dtype=float).ravel()
    if mu.size == 0:
        raise EmptyInput("empty mean vector")
    if not np.all(np.isfinite(mu)):
        raise NonFiniteValue("mean vector contains non-finite values")
    s = np.sort(mu)
    below = np.searchsorted(s, mu, side="left")
    above = mu.size - np.searchsorted(s, mu, side="right")
    return below + 1, mu.size - above


def set_ranks(mu) -> list[SetRank]:
    lo, up = set_rank_bounds(mu)
    return [SetRank(int(a), int(b)) for a, b in zip(lo, up)]
