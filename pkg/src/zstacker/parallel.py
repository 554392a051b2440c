"""Optional thread fan-out for per-frame work.

The worker count comes from the ZSTACK_THREADS environment variable (default 1,
i.e. plain sequential evaluation, which also gives the most stable timings).
Results always come back in input order, so parallelism never changes values.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")

ENV_THREADS = "ZSTACK_THREADS"


def thread_count() -> int:
    raw = os.environ.get(ENV_THREADS, "")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)


def map_ordered(fn: Callable[[T], R], items: Sequence[T] | Iterable[T]) -> list[R]:
    """Apply fn to every item, preserving order; threaded when configured."""
    items = list(items)
    n = thread_count()
    if n <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
