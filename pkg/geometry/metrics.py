"""Fiber distance metrics: pointwise distance, maximum Euclidean distance and
the length normalization term.

Coordinates arrive as float32; every difference, square root and comparison
is carried out in float64 so results do not depend on vectorization width or
on how the work is split between threads. The kernels are plain ``njit``
functions so the classifier and the oracle compile them inline.
"""

import math

import numba
import numpy as np

from models.errors import InvalidFiberError
from models.schemas import Orientation


@numba.njit(cache=True, nogil=True)
def point_distance(p, q):
    """Euclidean distance between two 3D points, in float64."""
    dx = np.float64(p[0]) - np.float64(q[0])
    dy = np.float64(p[1]) - np.float64(q[1])
    dz = np.float64(p[2]) - np.float64(q[2])
    return math.sqrt(dx * dx + dy * dy + dz * dz)


@numba.njit(cache=True, nogil=True)
def oriented_max_distance(a, b, inverse):
    """Largest paired point distance; a[i] pairs with b[i] or b[n - 1 - i]."""
    last = a.shape[0] - 1
    result = 0.0
    for i in range(a.shape[0]):
        j = last - i if inverse else i
        d = point_distance(a[i], b[j])
        if d > result:
            result = d
    return result


@numba.njit(cache=True, nogil=True)
def max_euclidean_distance(a, b):
    return min(oriented_max_distance(a, b, False), oriented_max_distance(a, b, True))


@numba.njit(cache=True, nogil=True)
def length_penalty(l_s, l_c):
    """Normalization term; callers guarantee max(l_s, l_c) > 0."""
    ratio = abs(l_s - l_c) / max(l_s, l_c) + 1.0
    return ratio * ratio - 1.0


@numba.njit(cache=True, nogil=True)
def chord_length(f):
    total = 0.0
    for i in range(1, f.shape[0]):
        total += point_distance(f[i - 1], f[i])
    return total


def max_pointwise_distance(a: np.ndarray, b: np.ndarray,
                           orientation: Orientation = Orientation.DIRECT) -> float:
    """Max over i of the distance between paired points under one orientation."""
    return oriented_max_distance(a, b, orientation == Orientation.INVERSE)


def d_me(a: np.ndarray, b: np.ndarray) -> float:
    """
    Maximum Euclidean distance between two resampled fibers.

    Fibers carry no direction, so both point pairings are evaluated and the
    smaller maximum is returned. Symmetric in its arguments and invariant
    under reversing either of them.
    """
    return max_euclidean_distance(a, b)


def tn(l_s: float, l_c: float) -> float:
    """
    Length normalization term ``(|l_s - l_c| / max(l_s, l_c) + 1)^2 - 1``.

    Raises:
        InvalidFiberError: a length is negative or both are zero
    """
    if l_s < 0 or l_c < 0:
        raise InvalidFiberError(f"fiber lengths must be non-negative, got {l_s} and {l_c}")
    if max(l_s, l_c) <= 0:
        raise InvalidFiberError("length penalty is undefined when both lengths are zero")
    return length_penalty(float(l_s), float(l_c))


def normalized_distance(a: np.ndarray, b: np.ndarray) -> float:
    """d_ME plus the length penalty, lengths taken on the resampled polylines."""
    return d_me(a, b) + tn(chord_length(a), chord_length(b))
