from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, TypeVar

logger = logging.getLogger(__name__)

ENV_THREADS = "FDNLS_THREADS"

T = TypeVar("T")
R = TypeVar("R")


def worker_count(n_items: int) -> int:
    cap = os.cpu_count() or 1
    raw = os.environ.get(ENV_THREADS)
    if raw:
        try:
            cap = int(raw)
            if cap < 1:
                raise ValueError(raw)
        except ValueError:
            logger.warning("ignoring invalid %s=%r", ENV_THREADS, raw)
            cap = os.cpu_count() or 1
    return max(1, min(n_items, cap))


def sweep_map(fn: Callable[[T], R], items: Iterable[T]) -> List[R]:
    """Map over independent sweep cells; results come back in input order."""
    items = list(items)
    workers = worker_count(len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers, thread_name_prefix="fdnls") as ex:
        return list(ex.map(fn, items))
