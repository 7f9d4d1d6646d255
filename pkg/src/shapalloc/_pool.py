"""Deterministic job execution over an optional process pool.

Heavy solvers split work into an ordered list of self-describing jobs.  A
producer hands jobs to workers; partial results are merged strictly in job
order, so the final numbers are identical whatever the worker count or
scheduling -- the single-worker run is the reference and the parallel runs
reproduce it bit for bit.

Workers receive the shared payload (scenario and friends) once, via the pool
initializer, and keep a private characteristic cache for the life of the
pool.  Caches are per-worker rather than shared: cached values are
deterministic, so merged results cannot differ.
"""

from __future__ import annotations

import multiprocessing as mp
import os
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable, Sequence

_PAYLOAD: Any = None
_WORKER_CACHE: Any = None


def _init_worker(payload):
    global _PAYLOAD, _WORKER_CACHE
    _PAYLOAD = payload
    _WORKER_CACHE = None


def worker_cache(max_entries: int | None = None):
    """Per-process characteristic cache, fresh for each run_jobs invocation."""
    global _WORKER_CACHE
    if _WORKER_CACHE is None:
        from .model import CharacteristicCache

        _WORKER_CACHE = CharacteristicCache(max_entries)
    return _WORKER_CACHE


def _call(args):
    fn, job = args
    return fn(_PAYLOAD, job)


def default_workers() -> int:
    env = os.environ.get("SHAPALLOC_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return max(1, os.cpu_count() or 1)


def run_jobs(
    fn: Callable[[Any, Any], Any],
    jobs: Sequence[Any],
    payload: Any,
    workers: int = 1,
) -> list[Any]:
    """Run ``fn(payload, job)`` for every job; results come back in job order."""
    if workers <= 1 or len(jobs) <= 1:
        _init_worker(payload)
        try:
            return [fn(payload, job) for job in jobs]
        finally:
            _init_worker(None)
    try:
        ctx = mp.get_context("fork")
    except ValueError:  # pragma: no cover - non-POSIX fallback
        ctx = mp.get_context()
    with ProcessPoolExecutor(
        max_workers=min(workers, len(jobs)),
        mp_context=ctx,
        initializer=_init_worker,
        initargs=(payload,),
    ) as pool:
        return list(pool.map(_call, [(fn, job) for job in jobs]))
