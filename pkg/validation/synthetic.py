"""Seeded synthetic atlases and subjects with ground-truth labels.

Bundle prototypes are circular arcs with random plane, radius and length,
placed so that any two prototypes stay ``separation`` apart. Centroids are
prototypes with a smooth control-point perturbation, resampled to 21 points.
Member fibers are noisy copies of a random centroid of their bundle, reversed
with probability 1/2. Distractors are arcs kept ``separation`` away from every
centroid point, so no bundle can accept them.

Randomness comes from numpy's PCG64 bit generator seeded with the generator seed,
and draws happen in a fixed order, so a seed fully determines the output.
"""

import json
import logging
import math
import os
from typing import NamedTuple

import numpy as np
from scipy.spatial import cKDTree

from config import (
    ARC_LENGTH_RANGE,
    ARC_RADIUS_RANGE,
    MAX_PLACEMENT_ATTEMPTS,
    PROTOTYPE_SAMPLES,
    RESAMPLE_POINTS,
)
from dataset_io.atlas import write_atlas
from dataset_io.fibr import write_fiber_file
from dataset_io.results import write_labels
from geometry.resampling import resample
from models.errors import SyntheticGenerationError
from models.schemas import DISTRACTOR, Atlas, AtlasBundle, FiberDataset, SyntheticSpec

logger = logging.getLogger(__name__)

CONTROL_POINTS = 5
MEMBER_BATCH = 65536


class SyntheticData(NamedTuple):
    atlas: Atlas
    dataset: FiberDataset
    labels: np.ndarray


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def _random_arc(rng: np.random.Generator, center: np.ndarray,
                n_samples: int = PROTOTYPE_SAMPLES) -> np.ndarray:
    radius = rng.uniform(*ARC_RADIUS_RANGE)
    length = rng.uniform(*ARC_LENGTH_RANGE)
    frame, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    u, v = frame[:, 0], frame[:, 1]
    span = length / radius
    theta = np.linspace(-span / 2, span / 2, n_samples)
    return (center
            + radius * (np.cos(theta) - 1.0)[:, None] * u
            + radius * np.sin(theta)[:, None] * v)


def _placement_extent(count: int, separation: float) -> float:
    cell = ARC_LENGTH_RANGE[1] + separation
    return 1.5 * cell * max(1, math.ceil(count ** (1.0 / 3.0)))


def _place_prototypes(rng: np.random.Generator, count: int, separation: float) -> np.ndarray:
    extent = _placement_extent(count, separation)
    prototypes = []
    for j in range(count):
        for _ in range(MAX_PLACEMENT_ATTEMPTS):
            arc = _random_arc(rng, rng.uniform(0.0, extent, size=3))
            if not prototypes:
                break
            placed = np.concatenate(prototypes)
            gap = np.min(np.linalg.norm(placed[:, None, :] - arc[None, :, :], axis=-1))
            if gap >= separation:
                break
        else:
            raise SyntheticGenerationError(
                f"could not place bundle prototype {j} with separation {separation} mm "
                f"after {MAX_PLACEMENT_ATTEMPTS} attempts"
            )
        prototypes.append(arc)
    return np.stack(prototypes)


def _perturbed_centroid(rng: np.random.Generator, prototype: np.ndarray, jitter: float) -> np.ndarray:
    n = prototype.shape[0]
    knots = np.linspace(0, n - 1, CONTROL_POINTS)
    offsets = rng.normal(0.0, jitter, size=(CONTROL_POINTS, 3))
    samples = np.arange(n)
    displacement = np.stack([np.interp(samples, knots, offsets[:, axis]) for axis in range(3)], axis=1)
    return resample(prototype + displacement, RESAMPLE_POINTS)


def _draw_members(rng: np.random.Generator, centroids: np.ndarray, count: int, sigma: float) -> np.ndarray:
    """Noisy copies of randomly chosen centroids, half of them reversed."""
    members = np.empty((count, RESAMPLE_POINTS, 3), dtype=np.float32)
    for start in range(0, count, MEMBER_BATCH):
        size = min(MEMBER_BATCH, count - start)
        picks = rng.integers(centroids.shape[0], size=size)
        noise = rng.normal(0.0, sigma, size=(size, RESAMPLE_POINTS, 3))
        flips = rng.random(size) < 0.5
        batch = centroids[picks].astype(np.float64) + noise
        batch[flips] = batch[flips, ::-1]
        members[start:start + size] = batch
    return members


def _place_distractors(rng: np.random.Generator, tree: cKDTree, count: int, separation: float,
                       low: np.ndarray, high: np.ndarray) -> np.ndarray:
    distractors = np.empty((count, RESAMPLE_POINTS, 3), dtype=np.float32)
    for i in range(count):
        for _ in range(MAX_PLACEMENT_ATTEMPTS):
            fiber = resample(_random_arc(rng, rng.uniform(low, high)), RESAMPLE_POINTS)
            gap, _ = tree.query(fiber.astype(np.float64))
            if gap.min() >= separation:
                break
        else:
            raise SyntheticGenerationError(
                f"could not place distractor {i} {separation} mm away from the atlas "
                f"after {MAX_PLACEMENT_ATTEMPTS} attempts"
            )
        distractors[i] = fiber
    return distractors


def _assemble(rng: np.random.Generator, parts, labels, source_path: str):
    fibers = np.concatenate(parts) if parts else np.empty((0, RESAMPLE_POINTS, 3), dtype=np.float32)
    labels = np.concatenate(labels).astype(np.int32) if labels else np.empty(0, dtype=np.int32)
    order = rng.permutation(fibers.shape[0])
    return FiberDataset.from_array(np.ascontiguousarray(fibers[order]), source_path), labels[order]


def generate_synthetic(spec: SyntheticSpec) -> SyntheticData:
    """
    Build an atlas and a subject with known labels.

    Args:
        spec: generator parameters; the seed fixes every draw

    Returns:
        SyntheticData(atlas, dataset, labels); labels hold the generating
        bundle index or DISTRACTOR

    Raises:
        SyntheticGenerationError: prototypes or distractors cannot be placed
            at the requested separation within the retry budget
    """
    rng = make_rng(spec.seed)
    prototypes = _place_prototypes(rng, spec.bundle_count, spec.separation)

    bundles = []
    for j, prototype in enumerate(prototypes):
        centroids = np.stack([
            _perturbed_centroid(rng, prototype, spec.jitter) for _ in range(spec.centroids_per_bundle)
        ])
        bundles.append(AtlasBundle(name=f"bundle_{j:03d}", threshold=spec.threshold, centroids=centroids))
    atlas = Atlas(bundles=bundles)

    parts, labels = [], []
    for j, bundle in enumerate(atlas.bundles):
        parts.append(_draw_members(rng, bundle.centroids, spec.fibers_per_bundle, spec.sigma))
        labels.append(np.full(spec.fibers_per_bundle, j))

    if spec.distractor_count:
        tree = cKDTree(np.concatenate([b.centroids.reshape(-1, 3) for b in atlas.bundles]).astype(np.float64))
        margin = ARC_LENGTH_RANGE[1] + spec.separation
        extent = _placement_extent(spec.bundle_count, spec.separation)
        parts.append(_place_distractors(rng, tree, spec.distractor_count, spec.separation,
                                        np.full(3, -margin), np.full(3, extent + margin)))
        labels.append(np.full(spec.distractor_count, DISTRACTOR))

    dataset, truth = _assemble(rng, parts, labels, "synthetic")
    logger.info("Generated %d bundles x %d centroids, %d subject fibers (%d distractors)",
                spec.bundle_count, spec.centroids_per_bundle, len(dataset), spec.distractor_count)
    return SyntheticData(atlas, dataset, truth)


def generate_subject(atlas: Atlas, n_fibers: int, sigma: float, distractor_fraction: float,
                     seed: int) -> SyntheticData:
    """
    Draw a subject from an existing atlas: members copy random centroids of
    uniformly chosen bundles, distractors stay twice the largest threshold
    away from every centroid point.
    """
    rng = make_rng(seed)
    n_distractors = int(round(n_fibers * distractor_fraction))
    n_members = n_fibers - n_distractors

    bundle_picks = rng.integers(len(atlas), size=n_members)
    parts, labels = [], []
    for j, bundle in enumerate(atlas.bundles):
        count = int(np.count_nonzero(bundle_picks == j))
        parts.append(_draw_members(rng, bundle.centroids, count, sigma))
        labels.append(np.full(count, j))

    if n_distractors:
        points = np.concatenate([b.centroids.reshape(-1, 3) for b in atlas.bundles]).astype(np.float64)
        separation = 2.0 * max(b.threshold for b in atlas.bundles)
        margin = ARC_LENGTH_RANGE[1] + separation
        parts.append(_place_distractors(rng, cKDTree(points), n_distractors, separation,
                                        points.min(axis=0) - margin, points.max(axis=0) + margin))
        labels.append(np.full(n_distractors, DISTRACTOR))

    dataset, truth = _assemble(rng, parts, labels, "synthetic")
    return SyntheticData(atlas, dataset, truth)


def write_synthetic(data: SyntheticData, spec: SyntheticSpec, out_dir: str) -> None:
    """Write ``atlas/``, ``subject.fib``, ``labels.csv`` and ``synthetic.json``."""
    os.makedirs(out_dir, exist_ok=True)
    write_atlas(data.atlas, os.path.join(out_dir, "atlas"))
    write_fiber_file(data.dataset, os.path.join(out_dir, "subject.fib"))
    write_labels(data.labels, data.atlas, os.path.join(out_dir, "labels.csv"))
    with open(os.path.join(out_dir, "synthetic.json"), "w", encoding="utf-8") as fh:
        json.dump(spec.model_dump(), fh, indent=2, sort_keys=True)
        fh.write("\n")
