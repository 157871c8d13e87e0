"""Atlas directories: a ``bundles.txt`` manifest plus one FIBR centroid file per bundle."""

import logging
import math
import os
from typing import List

import numpy as np
from pydantic import ValidationError

from config import RESAMPLE_POINTS
from dataset_io.fibr import read_fiber_file, write_fiber_file
from geometry.metrics import chord_length
from models.errors import AtlasError, FiberSegError
from models.schemas import Atlas, AtlasBundle, FiberDataset

logger = logging.getLogger(__name__)

MANIFEST_NAME = "bundles.txt"


def _parse_manifest(manifest: str) -> List[tuple]:
    entries = []
    seen = set()
    with open(manifest, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split()
            if len(fields) != 3:
                raise AtlasError(
                    f"{manifest}:{line_no}: expected '<bundle_name> <threshold_mm> <centroid_file>'"
                )
            name, threshold_text, rel_path = fields
            if any(ch in "/\\" for ch in name) or name in (".", ".."):
                raise AtlasError(f"{manifest}:{line_no}: bundle name {name!r} cannot be used as a file name")
            try:
                threshold = float(threshold_text)
            except ValueError:
                raise AtlasError(f"{manifest}:{line_no}: bundle {name}: threshold {threshold_text!r} is not a number")
            if not math.isfinite(threshold) or threshold <= 0:
                raise AtlasError(f"{manifest}:{line_no}: bundle {name}: threshold must be positive and finite")
            if name in seen:
                raise AtlasError(f"{manifest}:{line_no}: duplicate bundle name {name}")
            seen.add(name)
            entries.append((name, threshold, rel_path))
    return entries


def load_atlas(directory: str) -> Atlas:
    """
    Load an atlas directory.

    Args:
        directory: folder containing ``bundles.txt`` and the centroid files it names

    Returns:
        Atlas with bundles in manifest order

    Raises:
        AtlasError: missing manifest, malformed line, duplicate bundle name,
            non-positive threshold, unreadable centroid file or a centroid
            without exactly 21 points
    """
    manifest = os.path.join(directory, MANIFEST_NAME)
    if not os.path.isfile(manifest):
        raise AtlasError(f"atlas manifest not found: {manifest}")

    bundles = []
    for name, threshold, rel_path in _parse_manifest(manifest):
        centroid_path = os.path.join(directory, rel_path)
        try:
            centroids = read_fiber_file(centroid_path)
        except FileNotFoundError:
            raise AtlasError(f"bundle {name}: centroid file not found: {centroid_path}")
        except FiberSegError as e:
            raise AtlasError(f"bundle {name}: {e}")

        counts = centroids.point_counts
        if (counts != RESAMPLE_POINTS).any():
            bad = int(np.argmax(counts != RESAMPLE_POINTS))
            raise AtlasError(
                f"bundle {name}: centroid {bad} has {int(counts[bad])} points, expected {RESAMPLE_POINTS}"
            )
        array = centroids.as_array()
        for k in range(array.shape[0]):
            if not chord_length(array[k]) > 0:
                raise AtlasError(f"bundle {name}: centroid {k} has zero length")
        bundles.append(AtlasBundle(name=name, threshold=threshold, centroids=array))

    try:
        atlas = Atlas(bundles=bundles)
    except ValidationError as e:
        raise AtlasError(f"{manifest}: {e.errors()[0]['msg']}")
    logger.info("Loaded atlas %s: %d bundles, %d centroids", directory, len(atlas), atlas.n_centroids)
    return atlas


def write_atlas(atlas: Atlas, directory: str) -> None:
    """Write an atlas as a manifest plus ``<bundle_name>.fib`` centroid files."""
    os.makedirs(directory, exist_ok=True)
    lines = ["# bundle_name threshold_mm centroid_file"]
    for bundle in atlas.bundles:
        filename = f"{bundle.name}.fib"
        write_fiber_file(FiberDataset.from_array(bundle.centroids), os.path.join(directory, filename))
        lines.append(f"{bundle.name} {bundle.threshold!r} {filename}")
    with open(os.path.join(directory, MANIFEST_NAME), "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
