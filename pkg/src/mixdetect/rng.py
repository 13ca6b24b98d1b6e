"""Counter-keyed random streams and a deterministic parallel map.

A stream is identified by ``(seed, *key)``; the same key always yields the
same draws no matter which thread consumes it or in what order, so batched
Monte-Carlo work can be scheduled freely and merged in key order.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

import numpy as np

T = TypeVar("T")
R = TypeVar("R")

THREADS_ENV = "MIXDETECT_THREADS"


def stream(seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def worker_count() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return max(1, min(8, os.cpu_count() or 1))


def ordered_map(fn: Callable[[T], R], items: Iterable[T], workers: int | None = None) -> list[R]:
    """``list(map(fn, items))``, possibly threaded; output order is input order."""
    items = list(items)
    workers = worker_count() if workers is None else max(1, workers)
    if workers == 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))
