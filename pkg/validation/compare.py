"""Discrepancy reports between assignment sequences and against ground truth."""

from typing import Dict

import numba
import numpy as np

from classifier.cascade import endpoint_maxima
from classifier.segmenter import pack_atlas, subject_array
from models.schemas import DISTRACTOR, UNASSIGNED, AssignmentTable, Atlas, DiscrepancyReport, FiberDataset


def compare_assignments(a: AssignmentTable, b: AssignmentTable) -> DiscrepancyReport:
    """
    Count agreements and the two kinds of disagreement between ``a`` and ``b``.

    Raises:
        ValueError: the sequences have different lengths
    """
    if len(a) != len(b):
        raise ValueError(f"cannot compare {len(a)} assignments with {len(b)}")
    la, lb = a.bundle_index, b.bundle_index
    assigned_a = la != UNASSIGNED
    assigned_b = lb != UNASSIGNED

    matching = la == lb
    label_mismatches = int(np.count_nonzero(assigned_a & assigned_b & ~matching))
    assignment_mismatches = int(np.count_nonzero(assigned_a != assigned_b))

    both = matching & assigned_a
    max_diff = float(np.max(np.abs(a.distance[both] - b.distance[both]))) if both.any() else 0.0
    return DiscrepancyReport(
        total=len(a),
        matching=int(np.count_nonzero(matching)),
        label_mismatches=label_mismatches,
        assignment_mismatches=assignment_mismatches,
        max_score_difference=max_diff,
    )


@numba.njit(cache=True)
def _has_ambiguous_pair(a, centroids, bundle_offsets, thresholds):
    for b in range(thresholds.shape[0]):
        for k in range(bundle_offsets[b], bundle_offsets[b + 1]):
            m_dir, m_inv = endpoint_maxima(a, centroids[k])
            if max(m_dir, m_inv) <= thresholds[b]:
                return True
    return False


def explain_divergence(dataset: FiberDataset, atlas: Atlas,
                       a: AssignmentTable, b: AssignmentTable) -> Dict[str, int]:
    """
    Check every divergent fiber for a centroid whose both end-point pairings pass test2.

    Endpoint orientation inference can only differ from the two-orientation
    metric on such pairs, so ``unexplained`` is expected to be zero.
    """
    fibers = subject_array(dataset)
    packed = pack_atlas(atlas)
    divergent = np.flatnonzero(
        (a.bundle_index != b.bundle_index)
        | ((a.bundle_index != UNASSIGNED) & (a.distance != b.distance))
    )
    explained = 0
    for i in divergent:
        if _has_ambiguous_pair(fibers[i], packed.centroids, packed.bundle_offsets, packed.thresholds):
            explained += 1
    return {
        "divergent": int(divergent.size),
        "explained": explained,
        "unexplained": int(divergent.size) - explained,
    }


def ground_truth_accuracy(assignments: AssignmentTable, truth: np.ndarray) -> Dict[str, float]:
    """Member accuracy and distractor rejection rate against generator labels."""
    labels = assignments.bundle_index
    members = truth != DISTRACTOR
    distractors = ~members
    member_accuracy = float(np.mean(labels[members] == truth[members])) if members.any() else 1.0
    rejection = float(np.mean(labels[distractors] == UNASSIGNED)) if distractors.any() else 1.0
    return {"member_accuracy": member_accuracy, "distractor_rejection": rejection}
