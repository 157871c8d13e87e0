"""Worker-pool sizing for the numba parallel kernels."""

import logging
from contextlib import contextmanager
from typing import Union

import numba
import numpy as np

from config import CHUNK_COUNT

logger = logging.getLogger(__name__)


def resolve_workers(worker_count: Union[int, str] = "auto") -> int:
    """
    Translate a worker setting into a thread count numba can honour.

    Args:
        worker_count: positive count or "auto" for every available thread

    Returns:
        Thread count, clamped to numba's pool size
    """
    available = numba.config.NUMBA_NUM_THREADS
    if worker_count == "auto":
        return available
    if worker_count > available:
        logger.warning("Requested %d workers, numba pool has %d; using %d",
                       worker_count, available, available)
        return available
    return int(worker_count)


@contextmanager
def worker_threads(worker_count: Union[int, str] = "auto"):
    """Run the enclosed kernels on ``worker_count`` threads, then restore the previous setting."""
    previous = numba.get_num_threads()
    threads = resolve_workers(worker_count)
    numba.set_num_threads(threads)
    try:
        yield threads
    finally:
        numba.set_num_threads(previous)


def chunk_bounds(n_items: int, n_chunks: int = CHUNK_COUNT) -> np.ndarray:
    """
    Split ``range(n_items)`` into contiguous chunks.

    The split depends only on ``n_items``, never on the thread count, so
    every per-chunk tally is reproducible.
    """
    n_chunks = max(1, min(n_items, n_chunks))
    return (np.arange(n_chunks + 1, dtype=np.int64) * n_items) // n_chunks
