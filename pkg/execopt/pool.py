# execopt/pool.py
"""Order-preserving parallel map over independent work items (starts, hbar values, scan cells)."""

import logging
import multiprocessing
import os
from typing import Callable, Iterable, List, Optional

from .errors import ConfigError

logger = logging.getLogger(__name__)

WORKERS_ENV = "EXECOPT_WORKERS"


def worker_count(workers: Optional[int] = None) -> int:
    if workers is None:
        raw = os.getenv(WORKERS_ENV, "").strip()
        if raw:
            try:
                workers = int(raw)
            except ValueError:
                raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}")
        else:
            workers = os.cpu_count() or 1
    if workers < 1:
        raise ConfigError(f"worker count must be >= 1, got {workers}")
    return workers


def parallel_map(fn: Callable, items: Iterable, workers: Optional[int] = None,
                 progress: Optional[Callable[[int, int], None]] = None,
                 chunksize: int = 1) -> List:
    """
    [fn(x) for x in items], results in input order.

    fn and the items must be picklable when more than one worker is used.
    `progress(done, total)` is called in the parent after every result.
    """
    items = list(items)
    total = len(items)
    n = min(worker_count(workers), max(total, 1))
    out = []
    if n == 1:
        for x in items:
            out.append(fn(x))
            if progress:
                progress(len(out), total)
        return out

    logger.debug("parallel_map: %d items on %d workers", total, n)
    with multiprocessing.Pool(processes=n) as pool:
        for r in pool.imap(fn, items, chunksize=chunksize):
            out.append(r)
            if progress:
                progress(len(out), total)
    return out
