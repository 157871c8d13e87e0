"""FIBR fiber files, atlas directories and result serialization."""

from dataset_io.atlas import MANIFEST_NAME, load_atlas, write_atlas
from dataset_io.fibr import encode_fibers, read_fiber_file, write_fiber_file
from dataset_io.results import (
    read_assignments,
    write_assignments,
    write_labels,
    write_segmented_bundles,
)

__all__ = [
    "MANIFEST_NAME",
    "load_atlas",
    "write_atlas",
    "encode_fibers",
    "read_fiber_file",
    "write_fiber_file",
    "read_assignments",
    "write_assignments",
    "write_labels",
    "write_segmented_bundles",
]
