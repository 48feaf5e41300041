"""Process-level map used by dictionary builds and experiment trials."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor


def _worker_init():
    # workers run dense solves; keep BLAS single-threaded to avoid
    # oversubscription
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[var] = "1"


def parallel_map(fn, items, threads: int):
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(threads, len(items)),
                             initializer=_worker_init) as ex:
        return list(ex.map(fn, items))


def default_threads() -> int:
    env = os.environ.get("SCATTERID_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1
