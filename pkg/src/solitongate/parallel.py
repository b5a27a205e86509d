"""Ordered task execution on an optional process pool."""
from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor, as_completed
from typing import Callable, Iterable, Optional, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")

log = logging.getLogger(__name__)


def default_workers() -> int:
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


def run_tasks(
    fn: Callable[[T], R],
    tasks: Sequence[T],
    workers: Optional[int] = 1,
    progress: Optional[Callable[[int, int], None]] = None,
) -> list[R]:
    """Apply ``fn`` to every task; results come back in task order.

    ``workers=None`` uses every available CPU.  Progress callbacks receive
    (finished, total) and never influence the results; a callback with a
    true ``ordered`` attribute is fed in submission order instead of
    completion order.
    """
    workers = default_workers() if workers is None else max(1, int(workers))
    total = len(tasks)
    if workers == 1 or total <= 1:
        results = []
        for i, task in enumerate(tasks):
            results.append(fn(task))
            if progress:
                progress(i + 1, total)
        return results

    results: list = [None] * total
    with ProcessPoolExecutor(max_workers=min(workers, total)) as pool:
        futures = [pool.submit(fn, task) for task in tasks]
        pending: Iterable = futures if getattr(progress, "ordered", False) else as_completed(futures)
        index = {f: i for i, f in enumerate(futures)}
        for done, fut in enumerate(pending, 1):
            results[index[fut]] = fut.result()
            if progress:
                progress(done, total)
    return results
