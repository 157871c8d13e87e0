"""Parallel segmentation: every subject fiber is labelled with its closest bundle."""

import logging
import time
from functools import reduce
from typing import NamedTuple, Tuple

import numba
import numpy as np

from classifier.cascade import N_STAGES, classify_one
from classifier.workers import chunk_bounds, worker_threads
from config import RESAMPLE_POINTS
from geometry.metrics import chord_length
from geometry.resampling import fiber_lengths, resample
from models.errors import InvalidFiberError
from models.schemas import (
    UNASSIGNED,
    Assignment,
    AssignmentTable,
    Atlas,
    CascadeConfig,
    CascadeStats,
    FiberDataset,
)

logger = logging.getLogger(__name__)


class PackedAtlas(NamedTuple):
    """Flat arrays the kernels read; centroids of bundle b occupy rows bundle_offsets[b]:bundle_offsets[b+1]."""
    centroids: np.ndarray
    centroid_lengths: np.ndarray
    bundle_offsets: np.ndarray
    thresholds: np.ndarray


def pack_atlas(atlas: Atlas) -> PackedAtlas:
    centroids = np.ascontiguousarray(np.concatenate([b.centroids for b in atlas.bundles]))
    sizes = [b.centroids.shape[0] for b in atlas.bundles]
    bundle_offsets = np.zeros(len(sizes) + 1, dtype=np.int64)
    np.cumsum(sizes, out=bundle_offsets[1:])
    thresholds = np.array([b.threshold for b in atlas.bundles], dtype=np.float64)
    return PackedAtlas(centroids, fiber_lengths(centroids), bundle_offsets, thresholds)


@numba.njit(parallel=True, cache=True)
def _segment_kernel(fibers, lengths, centroids, centroid_lengths, bundle_offsets,
                    thresholds, indices, bounds, labels, scores, tallies):
    for chunk in numba.prange(bounds.shape[0] - 1):
        tally = tallies[chunk]
        for i in range(bounds[chunk], bounds[chunk + 1]):
            bundle, score = classify_one(fibers[i], lengths[i], centroids, centroid_lengths,
                                         bundle_offsets, thresholds, indices, tally)
            labels[i] = bundle
            scores[i] = score


def subject_array(dataset: FiberDataset) -> np.ndarray:
    if not dataset.is_resampled(RESAMPLE_POINTS):
        raise InvalidFiberError(
            f"subject fibers must be resampled to {RESAMPLE_POINTS} points before segmentation"
        )
    return dataset.as_array()


def classify_fiber(a: np.ndarray, atlas: Atlas, cfg: CascadeConfig = None,
                   packed: PackedAtlas = None) -> Tuple[Assignment, CascadeStats]:
    """
    Classify a single fiber against the whole atlas.

    Args:
        a: fiber; resampled to 21 points first when needed
        atlas: loaded atlas
        cfg: cascade settings
        packed: pre-packed atlas, to avoid repacking in loops

    Returns:
        (assignment with fiber_index 0, per-stage tallies of this fiber)
    """
    cfg = cfg or CascadeConfig()
    packed = packed or pack_atlas(atlas)
    a = np.asarray(a, dtype=np.float32)
    if a.shape != (RESAMPLE_POINTS, 3):
        a = resample(a, RESAMPLE_POINTS)
    tally = np.zeros(N_STAGES, dtype=np.int64)
    bundle, score = classify_one(a, chord_length(a), packed.centroids, packed.centroid_lengths,
                                 packed.bundle_offsets, packed.thresholds,
                                 np.asarray(cfg.test3_indices, dtype=np.int64), tally)
    bundle = int(bundle)
    assignment = Assignment(
        fiber_index=0,
        bundle_index=bundle,
        distance=float(score) if bundle != UNASSIGNED else None,
    )
    return assignment, CascadeStats.from_tallies(tally)


def segment(dataset: FiberDataset, atlas: Atlas,
            cfg: CascadeConfig = None) -> Tuple[AssignmentTable, CascadeStats]:
    """
    Label every subject fiber with its closest accepting bundle.

    Fibers are split into a fixed set of contiguous chunks processed in
    parallel; each fiber writes only its own result slot. Besides the
    inputs, memory use is one label, one score and one length per fiber plus
    one length per centroid.

    Args:
        dataset: subject fibers, resampled to 21 points
        atlas: loaded atlas
        cfg: cascade settings and worker count

    Returns:
        (assignments in subject order, merged per-stage counters)

    Raises:
        InvalidFiberError: the dataset is not resampled
    """
    cfg = cfg or CascadeConfig()
    fibers = subject_array(dataset)
    packed = pack_atlas(atlas)
    n_fibers = fibers.shape[0]
    bounds = chunk_bounds(n_fibers)
    labels = np.full(n_fibers, UNASSIGNED, dtype=np.int32)
    scores = np.full(n_fibers, np.inf, dtype=np.float64)
    tallies = np.zeros((bounds.shape[0] - 1, N_STAGES), dtype=np.int64)
    indices = np.asarray(cfg.test3_indices, dtype=np.int64)

    with worker_threads(cfg.worker_count) as threads:
        start = time.perf_counter()
        lengths = fiber_lengths(fibers)
        _segment_kernel(fibers, lengths, packed.centroids, packed.centroid_lengths,
                        packed.bundle_offsets, packed.thresholds, indices, bounds,
                        labels, scores, tallies)
        elapsed = time.perf_counter() - start

    stats = reduce(CascadeStats.merge, (CascadeStats.from_tallies(row) for row in tallies))
    logger.info("Segmented %d fibers against %d centroids on %d threads in %.2fs (%d accepted pairs)",
                n_fibers, packed.centroids.shape[0], threads, elapsed, stats.accepted)
    return AssignmentTable(bundle_index=labels, distance=scores), stats
