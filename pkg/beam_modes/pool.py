from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, List, Optional, Sequence, TypeVar

from .config import get_settings
from .errors import DomainError

T = TypeVar("T")
R = TypeVar("R")


def resolve_jobs(jobs: Optional[int] = None) -> int:
    """Worker count: explicit value, then ``max_parallel_jobs``, then the logical cores."""
    if jobs is None:
        jobs = get_settings().max_parallel_jobs or os.cpu_count() or 1
    if jobs < 1:
        raise DomainError(f"jobs must be at least 1, got {jobs}")
    return jobs


def ordered_map(function: Callable[[T], R], items: Iterable[T], jobs: Optional[int] = None) -> List[R]:
    """Map ``function`` over ``items`` keeping input order; one job runs in process.

    ``function`` must be a module-level callable so that it pickles.
    """
    items = list(items)
    workers = min(resolve_jobs(jobs), max(len(items), 1))
    if workers == 1:
        return [function(item) for item in items]
    chunksize = max(1, len(items) // (workers * 4))
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(function, items, chunksize=chunksize))


def chunked(values: Sequence[T], chunks: int) -> List[Sequence[T]]:
    """Split ``values`` into at most ``chunks`` contiguous, near-equal slices."""
    chunks = max(1, min(chunks, len(values)))
    size, extra = divmod(len(values), chunks)
    slices = []
    start = 0
    for index in range(chunks):
        stop = start + size + (1 if index < extra else 0)
        slices.append(values[start:stop])
        start = stop
    return [piece for piece in slices if len(piece)]
