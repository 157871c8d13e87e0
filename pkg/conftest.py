"""Shared fixtures: a small seeded synthetic atlas and subject."""

import os

import numpy as np
import pytest

from dataset_io.atlas import write_atlas
from dataset_io.fibr import write_fiber_file
from models.schemas import AtlasBundle, Atlas, SyntheticSpec
from validation.synthetic import generate_synthetic


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: spawns processes or runs larger workloads")
    config.addinivalue_line("markers", "property_based: hypothesis property tests")


def straight_fiber(start, stop, n=21) -> np.ndarray:
    """Evenly spaced points on a segment, float32."""
    t = np.linspace(0.0, 1.0, n)[:, None]
    start = np.asarray(start, dtype=np.float64)
    stop = np.asarray(stop, dtype=np.float64)
    return (start + t * (stop - start)).astype(np.float32)


@pytest.fixture(scope="session")
def small_spec() -> SyntheticSpec:
    return SyntheticSpec(
        bundle_count=3,
        centroids_per_bundle=2,
        fibers_per_bundle=20,
        distractor_count=10,
        sigma=0.3,
        separation=25.0,
        threshold=10.0,
        seed=7,
    )


@pytest.fixture(scope="session")
def synthetic(small_spec):
    return generate_synthetic(small_spec)


@pytest.fixture(scope="session")
def atlas_dir(synthetic, tmp_path_factory) -> str:
    directory = str(tmp_path_factory.mktemp("atlas"))
    write_atlas(synthetic.atlas, directory)
    return directory


@pytest.fixture(scope="session")
def subject_path(synthetic, tmp_path_factory) -> str:
    path = os.path.join(str(tmp_path_factory.mktemp("subject")), "subject.fib")
    write_fiber_file(synthetic.dataset, path)
    return path


@pytest.fixture
def line_atlas() -> Atlas:
    """Two bundles of straight centroids along x, 10 mm apart in y."""
    return Atlas(bundles=[
        AtlasBundle(name="lower", threshold=3.0,
                    centroids=straight_fiber([0, 0, 0], [40, 0, 0])[None]),
        AtlasBundle(name="upper", threshold=3.0,
                    centroids=straight_fiber([0, 10, 0], [40, 10, 0])[None]),
    ])
