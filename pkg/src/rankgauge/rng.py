"""Keyed random streams and a partition-invariant parallel map.

Every random draw in the package comes from a generator built from
``(seed, tag, index...)``. Work is cut into fixed-size blocks whose stream
depends only on the block index, so the numbers a replicate sees never depend
on how blocks are distributed across workers.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

T = TypeVar("T")
R = TypeVar("R")

THREADS_ENV = "RANKGAUGE_THREADS"

# stream tags; distinct purposes never share a stream
TAG_QUANTILE = 1
TAG_ZHANG_SIM = 2
TAG_COVERAGE_DATA = 3
TAG_ZHANG_REPLICATE = 4
TAG_CENTERS = 5

BLOCK = 4096


def stream(seed: int, *key: int) -> np.random.Generator:
    """Generator for the stream identified by ``seed`` and integer ``key``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def blocks(total: int, size: int = BLOCK) -> list[tuple[int, int, int]]:
    """Split ``range(total)`` into ``(block_index, start, stop)`` triples."""
    return [(b, s, min(s + size, total)) for b, s in enumerate(range(0, total, size))]


def worker_count() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return os.cpu_count() or 1


def pmap(fn: Callable[[T], R], tasks: Sequence[T] | Iterable[T], workers: int | None = None) -> list[R]:
    """Ordered map, optionally over a process pool.

    ``fn`` must be a module-level function. Output order follows ``tasks``
    regardless of the worker count.
    """
    tasks = list(tasks)
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as ex:
        return list(ex.map(fn, tasks))
