"""Oracles, synthetic workloads, discrepancy reports and benchmarks."""

from validation.bench import bench_oracle, bench_run, measure_segment, write_bench_csv
from validation.compare import compare_assignments, explain_divergence, ground_truth_accuracy
from validation.oracle import oracle_classify, oracle_classify_with_stats, oracle_pair_score
from validation.synthetic import (
    SyntheticData,
    generate_subject,
    generate_synthetic,
    make_rng,
    write_synthetic,
)

__all__ = [
    "bench_oracle",
    "bench_run",
    "measure_segment",
    "write_bench_csv",
    "compare_assignments",
    "explain_divergence",
    "ground_truth_accuracy",
    "oracle_classify",
    "oracle_classify_with_stats",
    "oracle_pair_score",
    "SyntheticData",
    "generate_subject",
    "generate_synthetic",
    "make_rng",
    "write_synthetic",
]
