"""Polyline length and equidistant resampling of fibers."""

import logging

import numba
import numpy as np

from config import RESAMPLE_POINTS
from geometry.metrics import chord_length, point_distance
from models.errors import InvalidFiberError
from models.schemas import FiberDataset

logger = logging.getLogger(__name__)


@numba.njit(cache=True, nogil=True)
def resample_into(src, out):
    """
    Fill ``out`` with len(out) points spaced evenly in arc length along ``src``.

    Interior points are linear interpolations at positions k * L / (n - 1) of
    the cumulative chord length; the endpoints are copied unchanged.
    Returns the source length L.
    """
    m = src.shape[0]
    n = out.shape[0]
    cumulative = np.empty(m, dtype=np.float64)
    cumulative[0] = 0.0
    for j in range(1, m):
        cumulative[j] = cumulative[j - 1] + point_distance(src[j - 1], src[j])
    total = cumulative[m - 1]

    for c in range(3):
        out[0, c] = src[0, c]
        out[n - 1, c] = src[m - 1, c]

    seg = 0
    for k in range(1, n - 1):
        s = k * total / (n - 1)
        while seg < m - 2 and cumulative[seg + 1] < s:
            seg += 1
        span = cumulative[seg + 1] - cumulative[seg]
        t = 0.0
        if span > 0.0:
            t = (s - cumulative[seg]) / span
        for c in range(3):
            p0 = np.float64(src[seg, c])
            p1 = np.float64(src[seg + 1, c])
            out[k, c] = p0 + t * (p1 - p0)
    return total


@numba.njit(parallel=True, cache=True)
def _resample_all(points, offsets, out, lengths):
    for i in numba.prange(offsets.shape[0] - 1):
        lengths[i] = resample_into(points[offsets[i]:offsets[i + 1]], out[i])


@numba.njit(parallel=True, cache=True)
def fiber_lengths(fibers):
    """Chord length of every fiber of an (N, n, 3) array."""
    lengths = np.empty(fibers.shape[0], dtype=np.float64)
    for i in numba.prange(fibers.shape[0]):
        lengths[i] = chord_length(fibers[i])
    return lengths


def _check_fiber(f: np.ndarray) -> np.ndarray:
    f = np.asarray(f, dtype=np.float32)
    if f.ndim != 2 or f.shape[1] != 3:
        raise InvalidFiberError(f"fiber must have shape (n, 3), got {f.shape}")
    if f.shape[0] < 2:
        raise InvalidFiberError(f"fiber has {f.shape[0]} points, at least 2 required")
    if not np.isfinite(f).all():
        raise InvalidFiberError("fiber has non-finite coordinates")
    return f


def polyline_length(f: np.ndarray) -> float:
    """
    Sum of segment chord lengths in millimeters.

    Raises:
        InvalidFiberError: fewer than 2 points or all points coincident
    """
    length = chord_length(_check_fiber(f))
    if length <= 0:
        raise InvalidFiberError("degenerate fiber: all points coincide")
    return length


def resample(f: np.ndarray, n: int = RESAMPLE_POINTS) -> np.ndarray:
    """
    Resample a fiber to ``n`` points equally spaced along its arc length.

    Args:
        f: (m, 3) polyline, m >= 2
        n: number of output points, n >= 2

    Returns:
        (n, 3) float32 array whose first and last rows equal those of ``f``

    Raises:
        InvalidFiberError: zero-length polyline or n < 2
    """
    if n < 2:
        raise InvalidFiberError(f"cannot resample to {n} points")
    f = _check_fiber(f)
    out = np.empty((n, 3), dtype=np.float32)
    if resample_into(f, out) <= 0:
        raise InvalidFiberError("cannot resample a zero-length fiber")
    return out


def reverse_fiber(f: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(f[::-1])


def resample_dataset(dataset: FiberDataset, n: int = RESAMPLE_POINTS) -> FiberDataset:
    """
    Resample every fiber of a dataset to ``n`` points, in parallel.

    A dataset whose fibers all have ``n`` points already is returned as is.

    Raises:
        InvalidFiberError: some fiber has zero length (the first one is named)
    """
    if dataset.is_resampled(n):
        return dataset
    if n < 2:
        raise InvalidFiberError(f"cannot resample to {n} points")
    out = np.empty((len(dataset), n, 3), dtype=np.float32)
    lengths = np.empty(len(dataset), dtype=np.float64)
    _resample_all(dataset.points, dataset.offsets, out, lengths)
    degenerate = np.flatnonzero(~(lengths > 0))
    if degenerate.size:
        raise InvalidFiberError(
            f"fiber {int(degenerate[0])} has zero length ({degenerate.size} degenerate fibers)"
        )
    logger.debug("Resampled %d fibers to %d points", len(dataset), n)
    return FiberDataset.from_array(out, dataset.source_path)
