from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor

_NO_SHARED = object()
_shared = _NO_SHARED


def resolve_jobs(jobs: int | None) -> int:
    if jobs is None or jobs <= 0:
        return os.cpu_count() or 1
    return jobs


def _init(shared):
    global _shared
    _shared = shared


def _call_shared(args):
    fn, item = args
    return fn(_shared, item)


def parallel_map(fn, items, jobs: int | None = 1, shared=_NO_SHARED) -> list:
    """``[fn(x) for x in items]``, optionally across processes; order is preserved.

    With ``shared`` given, ``fn(shared, x)`` is called instead and ``shared``
    is shipped to each worker once rather than with every item.
    """
    items = list(items)
    jobs = min(resolve_jobs(jobs), max(len(items), 1))
    if jobs <= 1:
        if shared is _NO_SHARED:
            return [fn(x) for x in items]
        return [fn(shared, x) for x in items]
    chunk = max(1, len(items) // (4 * jobs))
    if shared is _NO_SHARED:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items, chunksize=chunk))
    with ProcessPoolExecutor(max_workers=jobs, initializer=_init, initargs=(shared,)) as pool:
        return list(pool.map(_call_shared, [(fn, x) for x in items], chunksize=chunk))
