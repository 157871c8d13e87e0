"""The four-stage discard cascade applied to one (fiber, centroid) pair.

Stage order: center point, end points (which also fixes the orientation),
four intermediate points, then all 21 points plus the length penalty. A pair
is discarded as soon as one paired distance exceeds the bundle threshold;
equality is accepted everywhere.
"""

from typing import Optional

import numba
import numpy as np

from config import RESAMPLE_POINTS
from geometry.metrics import chord_length, length_penalty, point_distance
from models.schemas import CascadeConfig, Orientation

CENTER = (RESAMPLE_POINTS - 1) // 2

# Columns of the per-stage tally arrays, same order as models.schemas.STAGE_FIELDS.
T1 = 0
T2 = 1
T3 = 2
T4_DME = 3
T4_TN = 4
ACCEPTED = 5
N_STAGES = 6

DISCARD = -1
DIRECT = 0
INVERSE = 1


@numba.njit(cache=True, nogil=True)
def center_discards(a, c, thr):
    # the center point pairs with itself under both orientations
    return point_distance(a[CENTER], c[CENTER]) > thr


@numba.njit(cache=True, nogil=True)
def endpoint_maxima(a, c):
    """(direct, inverse) maxima of the two end-point distances."""
    last = a.shape[0] - 1
    m_dir = max(point_distance(a[0], c[0]), point_distance(a[last], c[last]))
    m_inv = max(point_distance(a[0], c[last]), point_distance(a[last], c[0]))
    return m_dir, m_inv


@numba.njit(cache=True, nogil=True)
def endpoint_orientation(a, c, thr):
    """DISCARD when both pairings exceed ``thr``, else DIRECT or INVERSE (ties go DIRECT)."""
    m_dir, m_inv = endpoint_maxima(a, c)
    if min(m_dir, m_inv) > thr:
        return DISCARD
    if m_inv < m_dir:
        return INVERSE
    return DIRECT


@numba.njit(cache=True, nogil=True)
def four_points_discard(a, c, inverse, thr, indices):
    last = a.shape[0] - 1
    for k in range(indices.shape[0]):
        i = indices[k]
        j = last - i if inverse else i
        if point_distance(a[i], c[j]) > thr:
            return True
    return False


@numba.njit(cache=True, nogil=True)
def full_score(a, c, inverse, thr, len_a, len_c):
    """
    Single-orientation maximum distance plus length penalty.

    Returns (stage, value): stage is T4_DME when some paired distance exceeds
    ``thr`` (the penalty is never computed), T4_TN when the penalized score
    exceeds it, ACCEPTED otherwise; value is the score when accepted.
    """
    last = a.shape[0] - 1
    m = 0.0
    for i in range(a.shape[0]):
        j = last - i if inverse else i
        d = point_distance(a[i], c[j])
        if d > thr:
            return T4_DME, d
        if d > m:
            m = d
    score = m + length_penalty(len_a, len_c)
    if score > thr:
        return T4_TN, score
    return ACCEPTED, score


@numba.njit(cache=True, nogil=True)
def classify_one(a, len_a, centroids, centroid_lengths, bundle_offsets, thresholds, indices, tally):
    """
    Run the cascade of fiber ``a`` against every centroid, bundle by bundle.

    Keeps the lowest accepted score; the strict comparison leaves ties with
    the lowest bundle, then the lowest centroid. Returns (bundle, score) with
    bundle -1 and score inf when no centroid accepts.
    """
    best = np.inf
    best_bundle = -1
    for b in range(thresholds.shape[0]):
        thr = thresholds[b]
        for k in range(bundle_offsets[b], bundle_offsets[b + 1]):
            c = centroids[k]
            if center_discards(a, c, thr):
                tally[T1] += 1
                continue
            orientation = endpoint_orientation(a, c, thr)
            if orientation == DISCARD:
                tally[T2] += 1
                continue
            inverse = orientation == INVERSE
            if four_points_discard(a, c, inverse, thr, indices):
                tally[T3] += 1
                continue
            stage, score = full_score(a, c, inverse, thr, len_a, centroid_lengths[k])
            tally[stage] += 1
            if stage == ACCEPTED and score < best:
                best = score
                best_bundle = b
    return best_bundle, best


def test_center(a: np.ndarray, c: np.ndarray, thr: float) -> bool:
    """True when the center points alone prove the pair is farther than ``thr``."""
    return bool(center_discards(a, c, float(thr)))


def test_endpoints(a: np.ndarray, c: np.ndarray, thr: float) -> Optional[Orientation]:
    """None when discarded, otherwise the orientation of the closer end-point pairing."""
    orientation = endpoint_orientation(a, c, float(thr))
    if orientation == DISCARD:
        return None
    return Orientation(orientation)


def test_four_points(a: np.ndarray, c: np.ndarray, orientation: Orientation, thr: float,
                     cfg: CascadeConfig = None) -> bool:
    """True when one of the intermediate points exceeds ``thr`` in the given orientation."""
    cfg = cfg or CascadeConfig()
    indices = np.asarray(cfg.test3_indices, dtype=np.int64)
    return bool(four_points_discard(a, c, orientation == Orientation.INVERSE, float(thr), indices))


def test_full(a: np.ndarray, c: np.ndarray, orientation: Orientation, thr: float,
              len_a: float = None, len_c: float = None) -> Optional[float]:
    """
    Complete metric in one orientation; None when the pair is discarded.

    Lengths default to the chord lengths of the resampled operands.
    """
    len_a = chord_length(a) if len_a is None else len_a
    len_c = chord_length(c) if len_c is None else len_c
    stage, score = full_score(a, c, orientation == Orientation.INVERSE, float(thr),
                              float(len_a), float(len_c))
    if stage != ACCEPTED:
        return None
    return score
