"""End-to-end tests of the command line and the segmentation workflow."""

import os

import numpy as np
import pytest

from cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, run, stats_report
from conftest import straight_fiber
from dataset_io.atlas import load_atlas
from dataset_io.fibr import read_fiber_file, write_fiber_file
from dataset_io.results import read_assignments
from graph.workflow import ASSIGNMENTS_NAME, BUNDLES_DIR, STATS_NAME, SegmentationWorkflow
from models.schemas import UNASSIGNED, AssignmentTable, CascadeConfig, FiberDataset

GEN_ARGS = ["--bundles", "2", "--centroids", "2", "--fibers", "15", "--distractors", "5",
            "--sigma", "0.3", "--separation", "25", "--threshold", "10"]


@pytest.fixture(scope="module")
def generated(tmp_path_factory) -> str:
    out = str(tmp_path_factory.mktemp("generated"))
    assert run(["gen-synthetic", "--out", out, "--seed", "3"] + GEN_ARGS) == EXIT_OK
    return out


def _segment(generated, out, *extra) -> int:
    return run(["segment", "--subject", os.path.join(generated, "subject.fib"),
                "--atlas", os.path.join(generated, "atlas"), "--out", out] + list(extra))


def _read(path) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def test_gen_synthetic_layout(generated):
    for name in ("atlas/bundles.txt", "atlas/bundle_000.fib", "subject.fib", "labels.csv", "synthetic.json"):
        assert os.path.exists(os.path.join(generated, name))
    assert len(read_fiber_file(os.path.join(generated, "subject.fib"))) == 35


def test_gen_synthetic_is_reproducible(generated, tmp_path):
    assert run(["gen-synthetic", "--out", str(tmp_path), "--seed", "3"] + GEN_ARGS) == EXIT_OK
    for name in ("subject.fib", "labels.csv", "atlas/bundle_001.fib"):
        with open(os.path.join(generated, name), "rb") as a, open(tmp_path / name, "rb") as b:
            assert a.read() == b.read()


def test_segment_writes_results(generated, tmp_path):
    assert _segment(generated, str(tmp_path)) == EXIT_OK
    atlas = load_atlas(os.path.join(generated, "atlas"))
    table = read_assignments(str(tmp_path / ASSIGNMENTS_NAME), atlas)
    assert len(table) == 35
    assert table.unassigned_count == 5

    summary = _read(tmp_path / BUNDLES_DIR / "summary.txt").splitlines()
    assert summary[-1] == "UNASSIGNED 5"
    counts = [int(line.split()[1]) for line in summary[:-1]]
    assert sum(counts) == 30
    assert "pairs_total 140" in _read(tmp_path / STATS_NAME)


def test_segment_output_independent_of_threads_and_mode(generated, tmp_path):
    outputs = []
    for name, extra in [("auto", []), ("one", ["--threads", "1"]), ("oracle", ["--mode", "oracle-endpoint"])]:
        out = str(tmp_path / name)
        assert _segment(generated, out, *extra) == EXIT_OK
        outputs.append(_read(os.path.join(out, ASSIGNMENTS_NAME)))
    assert outputs[0] == outputs[1] == outputs[2]


def test_stats_command(generated, tmp_path, capsys):
    assert _segment(generated, str(tmp_path)) == EXIT_OK
    capsys.readouterr()
    assert run(["stats", "--assignments", str(tmp_path / ASSIGNMENTS_NAME),
                "--atlas", os.path.join(generated, "atlas")]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "bundle count min median max"
    assert lines[-2] == "UNASSIGNED 5"
    assert lines[-1] == "TOTAL 35"


@pytest.mark.parametrize("mode", ["endpoint", "exact"])
def test_validate_command(generated, capsys, mode):
    code = run(["validate", "--subject", os.path.join(generated, "subject.fib"),
                "--atlas", os.path.join(generated, "atlas"), "--mode", mode])
    assert code == EXIT_OK
    out = capsys.readouterr().out
    assert "label mismatches: 0" in out
    if mode == "exact":
        assert "cascade vs exact oracle" in out


def test_resample_command(tmp_path):
    raw = FiberDataset.from_fibers([
        np.array([[0, 0, 0], [5, 0, 0], [5, 5, 0]], dtype=np.float32),
        straight_fiber([0, 0, 0], [0, 0, 30], n=50),
    ])
    write_fiber_file(raw, str(tmp_path / "raw.fib"))
    assert run(["resample", "--in", str(tmp_path / "raw.fib"), "--out", str(tmp_path / "out.fib")]) == EXIT_OK
    out = read_fiber_file(str(tmp_path / "out.fib"))
    assert out.is_resampled(21)
    assert run(["resample", "--in", str(tmp_path / "raw.fib"), "--out", str(tmp_path / "few.fib"),
                "--points", "5"]) == EXIT_OK
    assert read_fiber_file(str(tmp_path / "few.fib")).is_resampled(5)


def test_bench_command(generated, tmp_path):
    csv_path = str(tmp_path / "bench.csv")
    code = run(["bench", "--atlas", os.path.join(generated, "atlas"), "--sizes", "30,60",
                "--threads", "1", "--csv", csv_path, "--seed", "1", "--in-process"])
    assert code == EXIT_OK
    lines = _read(csv_path).splitlines()
    assert lines[0].startswith("fibers,workers,seconds,peak_bytes")
    assert [line.split(",")[0] for line in lines[1:]] == ["30", "60"]


@pytest.mark.parametrize("argv", [
    [],
    ["segment"],
    ["frobnicate"],
    ["segment", "--subject", "s.fib", "--atlas", "a", "--out", "o", "--threads", "zero"],
    ["segment", "--subject", "s.fib", "--atlas", "a", "--out", "o", "--threads", "0"],
    ["segment", "--subject", "s.fib", "--atlas", "a", "--out", "o", "--test3-indices", "3,7,13"],
    ["segment", "--subject", "s.fib", "--atlas", "a", "--out", "o", "--test3-indices", "3,7,12,17"],
    ["segment", "--subject", "s.fib", "--atlas", "a", "--out", "o", "--mode", "fast"],
    ["gen-synthetic", "--out", "o", "--seed", "-1"] + GEN_ARGS,
    ["gen-synthetic", "--out", "o", "--seed", "1", "--bundles", "2", "--centroids", "1", "--fibers", "1",
     "--distractors", "0", "--sigma", "0", "--separation", "10", "--threshold", "5"],
    ["bench", "--atlas", "a", "--sizes", "10,x", "--threads", "1", "--csv", "b.csv", "--seed", "1"],
    ["resample", "--in", "a.fib", "--out", "b.fib", "--points", "1"],
])
def test_usage_errors(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert run(argv) == EXIT_USAGE


def test_missing_subject_is_a_data_error(generated, tmp_path):
    code = run(["segment", "--subject", str(tmp_path / "nope.fib"),
                "--atlas", os.path.join(generated, "atlas"), "--out", str(tmp_path / "out")])
    assert code == EXIT_DATA


def test_corrupt_subject_is_a_data_error(generated, tmp_path):
    bad = tmp_path / "bad.fib"
    bad.write_bytes(b"NOPE" + b"\x00" * 20)
    code = run(["segment", "--subject", str(bad), "--atlas", os.path.join(generated, "atlas"),
                "--out", str(tmp_path / "out")])
    assert code == EXIT_DATA
    assert not os.path.exists(tmp_path / "out" / ASSIGNMENTS_NAME)


def test_zero_length_fiber_is_a_data_error(tmp_path):
    raw = FiberDataset.from_fibers([np.zeros((3, 3), dtype=np.float32)])
    write_fiber_file(raw, str(tmp_path / "raw.fib"))
    assert run(["resample", "--in", str(tmp_path / "raw.fib"), "--out", str(tmp_path / "out.fib")]) == EXIT_DATA


def test_stats_rejects_malformed_csv(generated, tmp_path):
    path = tmp_path / "assignments.csv"
    path.write_text("index,label\n0,1\n")
    assert run(["stats", "--assignments", str(path), "--atlas", os.path.join(generated, "atlas")]) == EXIT_DATA


def test_workflow_resamples_raw_subject(generated, tmp_path):
    atlas = load_atlas(os.path.join(generated, "atlas"))
    centroid = atlas.bundles[1].centroids[0]
    raw = FiberDataset.from_fibers([centroid[::2], straight_fiber([500, 500, 500], [530, 500, 500], n=4)])
    write_fiber_file(raw, str(tmp_path / "raw.fib"))

    steps = []
    workflow = SegmentationWorkflow(callback=lambda step, message: steps.append(step))
    state = workflow.run(str(tmp_path / "raw.fib"), os.path.join(generated, "atlas"),
                         str(tmp_path / "out"), CascadeConfig())
    assert state["errors"] == []
    assert state["current_step"] == "complete"
    assert steps == ["loading", "resampling", "classifying", "writing"]
    assert state["assignments"].bundle_index.tolist() == [1, UNASSIGNED]
    assert not os.path.exists(tmp_path / "out" / STATS_NAME)


def test_workflow_reports_missing_atlas(tmp_path, subject_path):
    state = SegmentationWorkflow().run(subject_path, str(tmp_path / "no-atlas"), str(tmp_path / "out"),
                                       CascadeConfig())
    assert state["current_step"] == "error"
    assert "manifest" in state["errors"][0]


def test_stats_report_lists_every_bundle(line_atlas):
    table = AssignmentTable(bundle_index=np.array([0, 0, UNASSIGNED], dtype=np.int32),
                            distance=np.array([1.0, 3.0, np.inf]))
    assert stats_report(table, line_atlas).splitlines() == [
        "bundle count min median max",
        "lower 2 1 2 3",
        "upper 0 - - -",
        "UNASSIGNED 1",
        "TOTAL 3",
    ]
