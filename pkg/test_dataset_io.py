"""Tests for FIBR files, atlas directories and result files."""

import os
import struct
import tracemalloc

import numpy as np
import pytest
from pydantic import ValidationError

from conftest import straight_fiber
from dataset_io.atlas import MANIFEST_NAME, load_atlas, write_atlas
from dataset_io.fibr import encode_fibers, read_fiber_file, write_fiber_file
from dataset_io.results import (
    SUMMARY_NAME,
    read_assignments,
    write_assignments,
    write_labels,
    write_segmented_bundles,
)
from models.errors import (
    AssignmentFormatError,
    AtlasError,
    BadMagicError,
    FiberFormatError,
    NonFiniteCoordinateError,
    PointCountError,
    TrailingBytesError,
    TruncatedFileError,
    UnsupportedVersionError,
)
from models.schemas import UNASSIGNED, AssignmentTable, AtlasBundle, FiberDataset


def _write_bytes(tmp_path, payload: bytes) -> str:
    path = str(tmp_path / "fibers.fib")
    with open(path, "wb") as fh:
        fh.write(payload)
    return path


def _two_fibers() -> FiberDataset:
    return FiberDataset.from_fibers([
        np.array([[0, 0, 0], [1, 2, 3]], dtype=np.float32),
        np.array([[4, 5, 6], [7, 8, 9], [10, 11, 12]], dtype=np.float32),
    ])


def test_encode_layout():
    payload = encode_fibers(_two_fibers())
    assert payload[:4] == b"FIBR"
    assert struct.unpack_from("<II", payload, 4) == (1, 2)
    assert struct.unpack_from("<I", payload, 12) == (2,)
    assert struct.unpack_from("<6f", payload, 16) == (0, 0, 0, 1, 2, 3)
    assert struct.unpack_from("<I", payload, 40) == (3,)
    assert len(payload) == 12 + 4 + 24 + 4 + 36


def test_round_trip_is_bit_exact(tmp_path):
    odd_values = np.array([
        [-0.0, 1e-45, 3.4028235e38],
        [np.float32(np.pi), -1e-38, 0.1],
        [1.0, 2.0, 3.0],
    ], dtype=np.float32)
    dataset = FiberDataset.from_fibers([odd_values, straight_fiber([0, 0, 0], [1, 1, 1], n=4)])
    path = str(tmp_path / "odd.fib")
    write_fiber_file(dataset, path)
    back = read_fiber_file(path)
    assert np.array_equal(back.offsets, dataset.offsets)
    assert np.array_equal(back.points.view(np.uint32), dataset.points.view(np.uint32))


def test_reading_preserves_ragged_fibers(tmp_path):
    path = _write_bytes(tmp_path, encode_fibers(_two_fibers()))
    dataset = read_fiber_file(path)
    assert len(dataset) == 2
    assert dataset.point_counts.tolist() == [2, 3]
    assert dataset.fiber(1)[2].tolist() == [10, 11, 12]


def test_bad_magic(tmp_path):
    payload = b"RBIF" + encode_fibers(_two_fibers())[4:]
    with pytest.raises(BadMagicError) as err:
        read_fiber_file(_write_bytes(tmp_path, payload))
    assert err.value.offset == 0


def test_unsupported_version(tmp_path):
    payload = bytearray(encode_fibers(_two_fibers()))
    payload[4:8] = struct.pack("<I", 2)
    with pytest.raises(UnsupportedVersionError) as err:
        read_fiber_file(_write_bytes(tmp_path, bytes(payload)))
    assert err.value.offset == 4


def test_zero_fibers_rejected(tmp_path):
    with pytest.raises(FiberFormatError):
        read_fiber_file(_write_bytes(tmp_path, b"FIBR" + struct.pack("<II", 1, 0)))


@pytest.mark.parametrize("cut", [1, 5, 30, 43])
def test_truncated_payload(tmp_path, cut):
    payload = encode_fibers(_two_fibers())
    with pytest.raises(TruncatedFileError):
        read_fiber_file(_write_bytes(tmp_path, payload[:-cut]))


def test_truncated_header(tmp_path):
    with pytest.raises(TruncatedFileError):
        read_fiber_file(_write_bytes(tmp_path, b"FIBR\x01\x00"))


def test_fiber_count_larger_than_the_file(tmp_path):
    payload = b"FIBR" + struct.pack("<II", 1, 0xFFFFFFFF) + encode_fibers(_two_fibers())[12:]
    with pytest.raises(TruncatedFileError) as err:
        read_fiber_file(_write_bytes(tmp_path, payload))
    assert err.value.offset == len(payload)


def test_reading_needs_about_one_file_size(tmp_path):
    rng = np.random.default_rng(4)
    dataset = FiberDataset.from_array(rng.normal(size=(20000, 21, 3)).astype(np.float32))
    path = str(tmp_path / "big.fib")
    write_fiber_file(dataset, path)
    size = os.path.getsize(path)
    read_fiber_file(_write_bytes(tmp_path, encode_fibers(_two_fibers())))  # JIT warm-up

    tracemalloc.start()
    try:
        back = read_fiber_file(path)
        _, peak = tracemalloc.get_traced_memory()
    finally:
        tracemalloc.stop()
    assert np.array_equal(back.points, dataset.points)
    assert peak < 1.5 * size


def test_point_count_below_two(tmp_path):
    payload = b"FIBR" + struct.pack("<III", 1, 1, 1) + struct.pack("<3f", 0, 0, 0)
    with pytest.raises(PointCountError) as err:
        read_fiber_file(_write_bytes(tmp_path, payload))
    assert err.value.offset == 12


def test_trailing_bytes(tmp_path):
    payload = encode_fibers(_two_fibers()) + b"\x00\x00"
    with pytest.raises(TrailingBytesError):
        read_fiber_file(_write_bytes(tmp_path, payload))


def test_non_finite_coordinate_reports_offset(tmp_path):
    payload = bytearray(encode_fibers(_two_fibers()))
    # second fiber, second point, y coordinate
    offset = 12 + 4 + 24 + 4 + 12 + 4
    payload[offset:offset + 4] = struct.pack("<f", float("nan"))
    with pytest.raises(NonFiniteCoordinateError) as err:
        read_fiber_file(_write_bytes(tmp_path, bytes(payload)))
    assert err.value.offset == offset
    assert f"byte offset {offset}" in str(err.value)


def test_write_empty_dataset_rejected(tmp_path):
    with pytest.raises(FiberFormatError):
        write_fiber_file(FiberDataset.from_fibers([]), str(tmp_path / "empty.fib"))


def test_atlas_round_trip(synthetic, tmp_path):
    write_atlas(synthetic.atlas, str(tmp_path))
    atlas = load_atlas(str(tmp_path))
    assert atlas.names == synthetic.atlas.names
    for got, expected in zip(atlas.bundles, synthetic.atlas.bundles):
        assert got.threshold == expected.threshold
        assert np.array_equal(got.centroids, expected.centroids)


def _atlas_with_manifest(tmp_path, manifest: str, centroid_points: int = 21):
    write_fiber_file(FiberDataset.from_array(straight_fiber([0, 0, 0], [20, 0, 0], n=centroid_points)[None]),
                     str(tmp_path / "c.fib"))
    (tmp_path / MANIFEST_NAME).write_text(manifest)
    return str(tmp_path)


def test_manifest_comments_and_blank_lines(tmp_path):
    atlas = load_atlas(_atlas_with_manifest(tmp_path, "# header\n\nAF_L 7.5 c.fib\nCST_R 5 c.fib\n"))
    assert atlas.names == ["AF_L", "CST_R"]
    assert atlas.bundles[0].threshold == 7.5


@pytest.mark.parametrize("manifest, message", [
    ("AF_L 7.5\n", "expected"),
    ("AF_L seven c.fib\n", "not a number"),
    ("AF_L 0 c.fib\n", "positive"),
    ("AF_L -2 c.fib\n", "positive"),
    ("AF_L inf c.fib\n", "positive"),
    ("AF_L 5 c.fib\nAF_L 6 c.fib\n", "duplicate"),
    ("AF_L 5 missing.fib\n", "not found"),
    ("../x 5 c.fib\n", "file name"),
    ("a\\b 5 c.fib\n", "file name"),
    (".. 5 c.fib\n", "file name"),
])
def test_manifest_errors(tmp_path, manifest, message):
    with pytest.raises(AtlasError, match=message):
        load_atlas(_atlas_with_manifest(tmp_path, manifest))


def test_missing_manifest(tmp_path):
    with pytest.raises(AtlasError, match="manifest"):
        load_atlas(str(tmp_path))


def test_centroid_with_wrong_point_count(tmp_path):
    with pytest.raises(AtlasError, match="centroid 0 has 20 points"):
        load_atlas(_atlas_with_manifest(tmp_path, "AF_L 5 c.fib\n", centroid_points=20))


def test_assignment_csv_round_trip(line_atlas, tmp_path):
    table = AssignmentTable(
        bundle_index=np.array([0, UNASSIGNED, 1, 0], dtype=np.int32),
        distance=np.array([1.25, np.inf, 0.0, 2.5]),
    )
    path = str(tmp_path / "assignments.csv")
    write_assignments(table, line_atlas, path)
    with open(path) as fh:
        lines = fh.read().splitlines()
    assert lines == [
        "fiber_index,bundle_index,bundle_name,distance",
        "0,0,lower,1.25",
        "1,-1,,",
        "2,1,upper,0",
        "3,0,lower,2.5",
    ]
    assert read_assignments(path, line_atlas).same_as(table)


def test_assignment_csv_rejects_unknown_bundle(line_atlas, tmp_path):
    path = tmp_path / "assignments.csv"
    path.write_text("fiber_index,bundle_index,bundle_name,distance\n0,5,nope,1\n")
    with pytest.raises(AssignmentFormatError):
        read_assignments(str(path), line_atlas)


def test_assignment_csv_rejects_out_of_order_rows(line_atlas, tmp_path):
    path = tmp_path / "assignments.csv"
    path.write_text("fiber_index,bundle_index,bundle_name,distance\n1,0,lower,1\n")
    with pytest.raises(AssignmentFormatError, match="expected fiber_index 0"):
        read_assignments(str(path), line_atlas)


def test_labels_csv_names_distractors(line_atlas, tmp_path):
    path = str(tmp_path / "labels.csv")
    write_labels(np.array([1, -1, 0]), line_atlas, path)
    with open(path) as fh:
        assert fh.read().splitlines()[1:] == ["0,1,upper", "1,-1,DISTRACTOR", "2,0,lower"]


def test_segmented_bundles_skip_empty_bundles(line_atlas, tmp_path):
    fibers = np.stack([straight_fiber([0, 0, i], [40, 0, i]) for i in range(3)])
    dataset = FiberDataset.from_array(fibers)
    table = AssignmentTable(
        bundle_index=np.array([0, UNASSIGNED, 0], dtype=np.int32),
        distance=np.array([0.0, np.inf, 2.0]),
    )
    write_segmented_bundles(dataset, table, line_atlas, str(tmp_path))

    assert not os.path.exists(tmp_path / "upper.fib")
    lower = read_fiber_file(str(tmp_path / "lower.fib"))
    assert np.array_equal(lower.as_array(), fibers[[0, 2]])
    assert (tmp_path / SUMMARY_NAME).read_text().splitlines() == ["lower 2", "upper 0", "UNASSIGNED 1"]


@pytest.mark.parametrize("name", ["../escape", "sub/dir", "back\\slash", ".", ".."])
def test_bundle_names_must_be_plain_file_names(name):
    with pytest.raises(ValidationError):
        AtlasBundle(name=name, threshold=5.0, centroids=straight_fiber([0, 0, 0], [20, 0, 0])[None])
