"""Ordered task execution over a process pool with single-threaded BLAS.

BLAS is pinned to one thread in every process so floating point reductions
are identical whatever the worker count.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor

from threadpoolctl import threadpool_limits

WORKERS_ENV = "FDASMOOTH_WORKERS"


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def _init_worker():
    threadpool_limits(1)


def run_tasks(fn, tasks, workers=None):
    """``[fn(*task) for task in tasks]``, possibly in parallel, in task order."""
    tasks = list(tasks)
    workers = default_workers() if workers is None else max(1, int(workers))
    if workers == 1 or len(tasks) <= 1:
        with threadpool_limits(1):
            return [fn(*task) for task in tasks]
    chunk = max(1, len(tasks) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker) as pool:
        return list(pool.map(fn, *zip(*tasks), chunksize=chunk))
