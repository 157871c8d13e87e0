"""Wall-clock and peak-memory benchmarks of the segmentation.

Each (fiber count, worker count) row is measured in a fresh spawned process
so that the peak resident size of one row never leaks into the next. Peak
memory is the platform peak-resident metric minus the resident size the
process had after imports and JIT warm-up, so rows show what the dataset and
the segmentation add on top of the interpreter.
"""

import csv
import logging
import multiprocessing
import os
import sys
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from typing import Dict, List, Sequence

import numpy as np
import psutil

from classifier.segmenter import segment
from classifier.workers import resolve_workers
from config import BENCH_DISTRACTOR_FRACTION, BENCH_SIGMA
from dataset_io.atlas import load_atlas
from dataset_io.fibr import read_fiber_file, write_fiber_file
from geometry.resampling import resample_dataset
from models.schemas import BENCH_COLUMNS, Atlas, BenchRow, CascadeConfig, FiberDataset, OracleMode
from validation.oracle import oracle_classify
from validation.synthetic import generate_subject

logger = logging.getLogger(__name__)

WARMUP_FIBERS = 64


def _current_rss() -> int:
    return psutil.Process().memory_info().rss


def _peak_rss() -> int:
    try:
        import resource
    except ImportError:
        # Windows exposes the peak working set instead
        return int(getattr(psutil.Process().memory_info(), "peak_wset", _current_rss()))
    peak = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
    # kilobytes on Linux, bytes on macOS
    return int(peak) if sys.platform == "darwin" else int(peak) * 1024


def _warm_up(atlas: Atlas, cfg: CascadeConfig) -> None:
    warm = generate_subject(atlas, WARMUP_FIBERS, 0.0, 0.0, seed=0).dataset
    segment(warm, atlas, cfg)


def measure_segment(subject_path: str, atlas_dir: str, workers: int,
                    test3_indices: Sequence[int] = None) -> Dict:
    """
    Time one segmentation of a subject file; file reading is not timed.

    ``peak_bytes`` covers the loaded subject plus the segmentation;
    ``input_bytes`` is the high-water mark after loading and ``aux_bytes`` how
    far the segmentation raised it.

    Returns:
        BenchRow fields as a plain dict (picklable across processes)
    """
    atlas = load_atlas(atlas_dir)
    cfg = CascadeConfig(worker_count=workers) if test3_indices is None else \
        CascadeConfig(worker_count=workers, test3_indices=tuple(test3_indices))
    _warm_up(atlas, cfg)
    baseline = _current_rss()

    dataset = resample_dataset(read_fiber_file(subject_path))
    loaded = max(baseline, _peak_rss())
    start = time.perf_counter()
    _, stats = segment(dataset, atlas, cfg)
    seconds = time.perf_counter() - start
    peak = _peak_rss()

    return BenchRow(
        fibers=len(dataset), workers=resolve_workers(cfg.worker_count), seconds=seconds,
        peak_bytes=max(0, peak - baseline), input_bytes=max(0, loaded - baseline),
        aux_bytes=max(0, peak - loaded), **stats.discard_fractions(),
    ).model_dump()


def bench_run(sizes: Sequence[int], atlas_dir: str, worker_counts: Sequence[int], seed: int,
              sigma: float = BENCH_SIGMA, distractor_fraction: float = BENCH_DISTRACTOR_FRACTION,
              isolated: bool = True, callback=None) -> List[BenchRow]:
    """
    Benchmark the segmentation over subject sizes and worker counts.

    Args:
        sizes: subject fiber counts; one synthetic subject is drawn per size
        atlas_dir: atlas the subjects are drawn from and segmented against
        worker_counts: thread counts to time for every size
        seed: seed of the subject generator
        sigma: member fiber noise, mm
        distractor_fraction: share of subject fibers that are distractors
        isolated: measure each row in a fresh spawned process
        callback: optional callback(row) invoked after every measurement

    Returns:
        One BenchRow per (size, worker count), sizes outermost
    """
    atlas = load_atlas(atlas_dir)
    rows = []
    with tempfile.TemporaryDirectory(prefix="fiberseg-bench-") as tmp:
        for size in sizes:
            subject_path = os.path.join(tmp, f"subject_{size}.fib")
            data = generate_subject(atlas, size, sigma, distractor_fraction, seed)
            write_fiber_file(data.dataset, subject_path)
            del data
            for workers in worker_counts:
                if isolated:
                    context = multiprocessing.get_context("spawn")
                    with ProcessPoolExecutor(max_workers=1, mp_context=context) as pool:
                        fields = pool.submit(measure_segment, subject_path, atlas_dir, workers).result()
                else:
                    fields = measure_segment(subject_path, atlas_dir, workers)
                row = BenchRow(**fields)
                matrix_bytes = 4 * size * atlas.n_centroids
                logger.info("fibers=%d workers=%d seconds=%.3f peak_bytes=%d (input %d, segmentation %d = %.3f%% "
                            "of a %d-byte distance matrix)",
                            row.fibers, row.workers, row.seconds, row.peak_bytes, row.input_bytes,
                            row.aux_bytes, 100.0 * row.aux_bytes / max(1, matrix_bytes), matrix_bytes)
                if callback:
                    callback(row)
                rows.append(row)
    return rows


def bench_oracle(dataset: FiberDataset, atlas: Atlas, workers="auto") -> Dict[str, float]:
    """Wall-clock of the cascade against the exhaustive endpoint-orientation oracle."""
    cfg = CascadeConfig(worker_count=workers)
    _warm_up(atlas, cfg)
    oracle_classify(dataset.subset(np.arange(min(len(dataset), WARMUP_FIBERS))), atlas,
                    OracleMode.ENDPOINT, workers)

    start = time.perf_counter()
    segment(dataset, atlas, cfg)
    cascade_seconds = time.perf_counter() - start

    start = time.perf_counter()
    oracle_classify(dataset, atlas, OracleMode.ENDPOINT, workers)
    oracle_seconds = time.perf_counter() - start

    return {
        "cascade_seconds": cascade_seconds,
        "oracle_seconds": oracle_seconds,
        "speedup": oracle_seconds / cascade_seconds if cascade_seconds > 0 else float("inf"),
    }


def write_bench_csv(rows: Sequence[BenchRow], path: str) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(BENCH_COLUMNS)
        for row in rows:
            writer.writerow(row.csv_values())
