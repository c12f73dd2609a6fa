"""Order-preserving task map, optionally over worker processes."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor

WORKERS_ENV = "HOMLAB_WORKERS"


def workers_from_env(default: int = 1) -> int:
    raw = os.environ.get(WORKERS_ENV, "").strip()
    if not raw:
        return default
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    return max(1, n)


def pmap(fn, tasks, workers: int | None = None) -> list:
    """``[fn(*task) for task in tasks]``, in task order regardless of workers."""
    tasks = list(tasks)
    workers = workers_from_env() if workers is None else workers
    if workers <= 1 or len(tasks) <= 1:
        return [fn(*task) for task in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, *task) for task in tasks]
        return [f.result() for f in futures]
