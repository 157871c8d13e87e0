"""Brute-force reference classifier: every pair gets its full score, nothing is pruned."""

import logging
import time
from typing import Tuple

import numba
import numpy as np

from classifier.cascade import ACCEPTED, N_STAGES, T4_DME, T4_TN, endpoint_maxima
from classifier.segmenter import subject_array, pack_atlas
from classifier.workers import chunk_bounds, worker_threads
from geometry.metrics import length_penalty, oriented_max_distance
from geometry.resampling import fiber_lengths
from models.schemas import UNASSIGNED, AssignmentTable, Atlas, CascadeStats, FiberDataset, OracleMode

logger = logging.getLogger(__name__)


@numba.njit(cache=True, nogil=True)
def oracle_pair_score(a, c, len_a, len_c, exact):
    """
    Returns (single-orientation max, full score).

    Exact mode takes the smaller maximum of both pairings; endpoint mode keeps
    the pairing whose end points are closer (ties go direct).
    """
    if exact:
        m = min(oriented_max_distance(a, c, False), oriented_max_distance(a, c, True))
    else:
        m_dir, m_inv = endpoint_maxima(a, c)
        m = oriented_max_distance(a, c, m_inv < m_dir)
    return m, m + length_penalty(len_a, len_c)


@numba.njit(parallel=True, cache=True)
def _oracle_kernel(fibers, lengths, centroids, centroid_lengths, bundle_offsets,
                   thresholds, exact, bounds, labels, scores, tallies):
    for chunk in numba.prange(bounds.shape[0] - 1):
        tally = tallies[chunk]
        for i in range(bounds[chunk], bounds[chunk + 1]):
            best = np.inf
            best_bundle = -1
            for b in range(thresholds.shape[0]):
                thr = thresholds[b]
                for k in range(bundle_offsets[b], bundle_offsets[b + 1]):
                    m, score = oracle_pair_score(fibers[i], centroids[k], lengths[i],
                                                 centroid_lengths[k], exact)
                    if score <= thr:
                        tally[ACCEPTED] += 1
                        if score < best:
                            best = score
                            best_bundle = b
                    elif m > thr:
                        tally[T4_DME] += 1
                    else:
                        tally[T4_TN] += 1
            labels[i] = best_bundle
            scores[i] = best


def oracle_classify_with_stats(dataset: FiberDataset, atlas: Atlas, mode: OracleMode,
                               worker_count="auto") -> Tuple[AssignmentTable, CascadeStats]:
    """
    Oracle segmentation plus rejection counters.

    Rejections are tallied as test4 outcomes: ``dme`` when the orientation
    maximum alone exceeds the threshold, ``tn`` otherwise.
    """
    fibers = subject_array(dataset)
    packed = pack_atlas(atlas)
    n_fibers = fibers.shape[0]
    bounds = chunk_bounds(n_fibers)
    labels = np.full(n_fibers, UNASSIGNED, dtype=np.int32)
    scores = np.full(n_fibers, np.inf, dtype=np.float64)
    tallies = np.zeros((bounds.shape[0] - 1, N_STAGES), dtype=np.int64)

    with worker_threads(worker_count):
        start = time.perf_counter()
        lengths = fiber_lengths(fibers)
        _oracle_kernel(fibers, lengths, packed.centroids, packed.centroid_lengths,
                       packed.bundle_offsets, packed.thresholds, mode == OracleMode.EXACT,
                       bounds, labels, scores, tallies)
        elapsed = time.perf_counter() - start

    logger.info("Oracle (%s) classified %d fibers in %.2fs", mode.value, n_fibers, elapsed)
    return AssignmentTable(bundle_index=labels, distance=scores), CascadeStats.from_tallies(tallies)


def oracle_classify(dataset: FiberDataset, atlas: Atlas,
                    mode: OracleMode = OracleMode.ENDPOINT, worker_count="auto") -> AssignmentTable:
    """
    Classify every fiber by exhaustive scoring against every centroid.

    Args:
        dataset: subject fibers resampled to 21 points
        atlas: loaded atlas
        mode: ENDPOINT fixes the orientation with the end-point rule (the
            reference the cascade must match exactly); EXACT minimizes over
            both orientations
        worker_count: threads for the parallel loop

    Returns:
        Assignments with the cascade's tie-break rule
    """
    assignments, _ = oracle_classify_with_stats(dataset, atlas, mode, worker_count)
    return assignments
