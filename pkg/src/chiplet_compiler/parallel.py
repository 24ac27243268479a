"""Fork-join helper: ordered results regardless of worker count."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor


def default_workers() -> int:
    return os.cpu_count() or 1


def _call(task):
    fn, args = task
    return fn(*args)


def run_tasks(tasks, workers: int = 1) -> list:
    """Evaluate ``(fn, args)`` tasks; results come back in task order.

    ``fn`` must be a module-level function so it pickles.
    """
    tasks = list(tasks)
    if workers <= 1 or len(tasks) <= 1:
        return [_call(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
        return list(pool.map(_call, tasks))
