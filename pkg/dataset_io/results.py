"""Assignment CSVs, ground-truth label CSVs and per-bundle output files."""

import csv
import logging
import os

import numpy as np

from config import CSV_DISTANCE_DIGITS
from dataset_io.fibr import write_fiber_file
from models.errors import AssignmentFormatError
from models.schemas import DISTRACTOR, UNASSIGNED, AssignmentTable, Atlas, FiberDataset

logger = logging.getLogger(__name__)

ASSIGNMENT_HEADER = ["fiber_index", "bundle_index", "bundle_name", "distance"]
LABEL_HEADER = ["fiber_index", "bundle_index", "bundle_name"]
DISTRACTOR_NAME = "DISTRACTOR"
SUMMARY_NAME = "summary.txt"


def format_distance(value: float) -> str:
    return f"{value:.{CSV_DISTANCE_DIGITS}g}"


def write_assignments(assignments: AssignmentTable, atlas: Atlas, path: str) -> None:
    """
    Write one CSV row per fiber in index order.

    Unassigned fibers are written as ``<i>,-1,,``.
    """
    names = atlas.names
    labels = assignments.bundle_index
    distance = assignments.distance
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(ASSIGNMENT_HEADER)
        for i in range(labels.shape[0]):
            label = int(labels[i])
            if label == UNASSIGNED:
                writer.writerow([i, UNASSIGNED, "", ""])
            else:
                writer.writerow([i, label, names[label], format_distance(distance[i])])
    logger.debug("Wrote %d assignments to %s", labels.shape[0], path)


def read_assignments(path: str, atlas: Atlas) -> AssignmentTable:
    """
    Parse an assignment CSV written by ``write_assignments``.

    Raises:
        AssignmentFormatError: wrong header, rows out of order, or bundle
            indices/names that do not match the atlas
    """
    names = atlas.names
    labels = []
    distances = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ASSIGNMENT_HEADER:
            raise AssignmentFormatError(f"{path}: unexpected header {header}")
        for row_no, row in enumerate(reader, start=2):
            if len(row) != 4:
                raise AssignmentFormatError(f"{path}:{row_no}: expected 4 fields, got {len(row)}")
            try:
                index = int(row[0])
                label = int(row[1])
            except ValueError:
                raise AssignmentFormatError(f"{path}:{row_no}: non-integer index")
            if index != len(labels):
                raise AssignmentFormatError(f"{path}:{row_no}: expected fiber_index {len(labels)}, got {index}")
            if label == UNASSIGNED:
                labels.append(UNASSIGNED)
                distances.append(np.inf)
                continue
            if not 0 <= label < len(names) or row[2] != names[label]:
                raise AssignmentFormatError(f"{path}:{row_no}: bundle {label} {row[2]!r} is not in the atlas")
            try:
                distances.append(float(row[3]))
            except ValueError:
                raise AssignmentFormatError(f"{path}:{row_no}: distance {row[3]!r} is not a number")
            labels.append(label)
    return AssignmentTable(
        bundle_index=np.asarray(labels, dtype=np.int32),
        distance=np.asarray(distances, dtype=np.float64),
    )


def write_labels(labels: np.ndarray, atlas: Atlas, path: str) -> None:
    """Ground-truth CSV of generated subjects; negatives are named DISTRACTOR."""
    names = atlas.names
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(LABEL_HEADER)
        for i, label in enumerate(labels.tolist()):
            writer.writerow([i, label, DISTRACTOR_NAME if label == DISTRACTOR else names[label]])


def write_segmented_bundles(dataset: FiberDataset, assignments: AssignmentTable,
                            atlas: Atlas, out_dir: str) -> None:
    """
    Write one FIBR file per non-empty bundle plus a per-bundle count summary.

    Fibers keep ascending subject order inside each bundle file.
    """
    os.makedirs(out_dir, exist_ok=True)
    counts = assignments.counts(len(atlas))
    for j, bundle in enumerate(atlas.bundles):
        if counts[j] == 0:
            continue
        members = np.flatnonzero(assignments.bundle_index == j)
        write_fiber_file(dataset.subset(members), os.path.join(out_dir, f"{bundle.name}.fib"))

    lines = [f"{bundle.name} {int(counts[j])}" for j, bundle in enumerate(atlas.bundles)]
    lines.append(f"UNASSIGNED {assignments.unassigned_count}")
    with open(os.path.join(out_dir, SUMMARY_NAME), "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    logger.info("Wrote %d bundle files to %s", int(np.count_nonzero(counts)), out_dir)
