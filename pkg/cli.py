"""
FiberSeg command line.

Subcommands: segment, resample, gen-synthetic, validate, bench, stats.
Exit status is 0 on success, 1 on usage errors and 2 on data or validation
errors. Diagnostics go to stderr; results go to files or stdout.
"""

import argparse
import logging
import sys
from typing import List, Optional

import numpy as np
from pydantic import ValidationError

from classifier.segmenter import segment
from config import (
    BENCH_DISTRACTOR_FRACTION,
    BENCH_SIGMA,
    DEFAULT_WORKERS,
    RESAMPLE_POINTS,
    setup_logging,
)
from dataset_io.atlas import load_atlas
from dataset_io.fibr import read_fiber_file, write_fiber_file
from dataset_io.results import format_distance, read_assignments
from geometry.resampling import resample_dataset
from graph.workflow import SegmentationWorkflow
from models.errors import FiberSegError
from models.schemas import (
    STAGE_FIELDS,
    AssignmentTable,
    Atlas,
    CascadeConfig,
    CascadeStats,
    CommandSpec,
    OracleMode,
    SyntheticSpec,
)
from validation.bench import bench_oracle, bench_run, write_bench_csv
from validation.compare import compare_assignments, explain_divergence
from validation.oracle import oracle_classify
from validation.synthetic import generate_subject, generate_synthetic, write_synthetic

logger = logging.getLogger("fiberseg")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that reports usage errors instead of exiting with status 2."""

    def error(self, message):
        raise UsageError(f"{self.format_usage().strip()}\n{self.prog}: error: {message}")


def _int_list(text: str) -> List[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("expected at least one integer")
    return values


def _positive_int_list(text: str) -> List[int]:
    values = _int_list(text)
    if min(values) < 1:
        raise argparse.ArgumentTypeError(f"values must be positive, got {text!r}")
    return values


def _non_negative_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fiberseg", description="Atlas-based white-matter fiber segmentation.")
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR")
    sub = parser.add_subparsers(dest="subcommand", parser_class=_Parser)

    p = sub.add_parser("segment", help="label every subject fiber with its closest atlas bundle")
    p.add_argument("--subject", required=True, help="subject FIBR file")
    p.add_argument("--atlas", required=True, help="atlas directory")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--threads", default=DEFAULT_WORKERS, help="worker count or 'auto'")
    p.add_argument("--mode", default="cascade", choices=["cascade", "oracle-endpoint", "oracle-exact"])
    p.add_argument("--test3-indices", type=_int_list, default=None,
                   help="four comma-separated point indices of the third test")

    p = sub.add_parser("resample", help="resample every fiber to equidistant points")
    p.add_argument("--in", dest="input", required=True, help="input FIBR file")
    p.add_argument("--out", required=True, help="output FIBR file")
    p.add_argument("--points", type=int, default=RESAMPLE_POINTS)

    p = sub.add_parser("gen-synthetic", help="generate an atlas and a subject with ground truth")
    p.add_argument("--out", required=True)
    p.add_argument("--bundles", type=int, required=True)
    p.add_argument("--centroids", type=int, required=True)
    p.add_argument("--fibers", type=int, required=True, help="member fibers per bundle")
    p.add_argument("--distractors", type=int, required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--separation", type=float, required=True)
    p.add_argument("--threshold", type=float, required=True)
    p.add_argument("--seed", type=_non_negative_int, required=True)

    p = sub.add_parser("validate", help="compare the cascade with the brute-force oracle")
    p.add_argument("--subject", required=True)
    p.add_argument("--atlas", required=True)
    p.add_argument("--mode", default="endpoint", choices=["endpoint", "exact"])
    p.add_argument("--threads", default=DEFAULT_WORKERS)

    p = sub.add_parser("bench", help="time and memory scaling of the segmentation")
    p.add_argument("--atlas", required=True)
    p.add_argument("--sizes", type=_positive_int_list, required=True)
    p.add_argument("--threads", type=_positive_int_list, required=True)
    p.add_argument("--csv", required=True)
    p.add_argument("--seed", type=_non_negative_int, required=True)
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--distractor-fraction", type=float, default=None)
    p.add_argument("--oracle", action="store_true",
                   help="also time the endpoint-orientation oracle on the first size")
    p.add_argument("--in-process", action="store_true",
                   help="measure rows in this process instead of fresh ones")

    p = sub.add_parser("stats", help="per-bundle summary of an assignment CSV")
    p.add_argument("--assignments", required=True)
    p.add_argument("--atlas", required=True)

    return parser


def _cascade_config(threads, test3_indices=None) -> CascadeConfig:
    if test3_indices is None:
        return CascadeConfig(worker_count=threads)
    if len(test3_indices) != 4:
        raise UsageError(f"--test3-indices needs exactly 4 indices, got {len(test3_indices)}")
    return CascadeConfig(worker_count=threads, test3_indices=tuple(test3_indices))


def render_cascade_stats(stats: CascadeStats) -> str:
    lines = [f"pairs_total {stats.pairs_total}"]
    for name in STAGE_FIELDS:
        lines.append(f"{name} {getattr(stats, name)}")
    return "\n".join(lines)


def stats_report(assignments: AssignmentTable, atlas: Atlas, stats: Optional[CascadeStats] = None) -> str:
    """
    Per-bundle fiber counts and score distribution (min/median/max).

    Args:
        assignments: segmentation output
        atlas: atlas the bundle indices refer to
        stats: optional cascade counters appended to the report

    Returns:
        Text summary; bundle counts plus UNASSIGNED add up to the dataset size
    """
    labels = assignments.bundle_index
    lines = ["bundle count min median max"]
    for j, name in enumerate(atlas.names):
        scores = assignments.distance[labels == j]
        if scores.size:
            summary = " ".join(format_distance(v) for v in (scores.min(), np.median(scores), scores.max()))
        else:
            summary = "- - -"
        lines.append(f"{name} {scores.size} {summary}")
    lines.append(f"UNASSIGNED {assignments.unassigned_count}")
    lines.append(f"TOTAL {len(assignments)}")
    if stats is not None:
        lines.append("")
        lines.append(render_cascade_stats(stats))
    return "\n".join(lines) + "\n"


def _cmd_segment(args) -> int:
    cfg = _cascade_config(args.threads, args.test3_indices)
    workflow = SegmentationWorkflow(
        callback=lambda step, message: logger.info("[%s] %s", step, message),
        reporter=stats_report,
    )
    state = workflow.run(args.subject, args.atlas, args.out, cfg, mode=args.mode)
    if state["errors"]:
        for error in state["errors"]:
            logger.error("%s", error)
        return EXIT_DATA
    return EXIT_OK


def _cmd_resample(args) -> int:
    if args.points < 2:
        raise UsageError(f"--points must be at least 2, got {args.points}")
    dataset = read_fiber_file(args.input)
    write_fiber_file(resample_dataset(dataset, args.points), args.out)
    logger.info("Resampled %d fibers to %d points into %s", len(dataset), args.points, args.out)
    return EXIT_OK


def _cmd_gen_synthetic(args) -> int:
    spec = SyntheticSpec(
        bundle_count=args.bundles,
        centroids_per_bundle=args.centroids,
        fibers_per_bundle=args.fibers,
        distractor_count=args.distractors,
        sigma=args.sigma,
        separation=args.separation,
        threshold=args.threshold,
        seed=args.seed,
    )
    write_synthetic(generate_synthetic(spec), spec, args.out)
    logger.info("Synthetic atlas and subject written to %s", args.out)
    return EXIT_OK


def _cmd_validate(args) -> int:
    cfg = _cascade_config(args.threads)
    dataset = resample_dataset(read_fiber_file(args.subject))
    atlas = load_atlas(args.atlas)

    cascade, _ = segment(dataset, atlas, cfg)
    endpoint = oracle_classify(dataset, atlas, OracleMode.ENDPOINT, cfg.worker_count)
    equivalence = compare_assignments(cascade, endpoint)
    print("cascade vs endpoint-orientation oracle")
    print(equivalence.render())

    if args.mode == "exact":
        exact = oracle_classify(dataset, atlas, OracleMode.EXACT, cfg.worker_count)
        print()
        print("cascade vs exact oracle")
        print(compare_assignments(cascade, exact).render())
        divergence = explain_divergence(dataset, atlas, cascade, exact)
        print(f"divergent fibers with an orientation-ambiguous pair: "
              f"{divergence['explained']} of {divergence['divergent']}")

    if equivalence.mismatches or equivalence.max_score_difference != 0:
        logger.error("cascade differs from the endpoint-orientation oracle on %d fibers",
                     equivalence.mismatches)
        return EXIT_DATA
    return EXIT_OK


def _cmd_bench(args) -> int:
    kwargs = {}
    if args.sigma is not None:
        kwargs["sigma"] = args.sigma
    if args.distractor_fraction is not None:
        kwargs["distractor_fraction"] = args.distractor_fraction
    rows = bench_run(args.sizes, args.atlas, args.threads, args.seed,
                     isolated=not args.in_process, **kwargs)
    write_bench_csv(rows, args.csv)

    if args.oracle:
        atlas = load_atlas(args.atlas)
        data = generate_subject(atlas, args.sizes[0], kwargs.get("sigma", BENCH_SIGMA),
                                kwargs.get("distractor_fraction", BENCH_DISTRACTOR_FRACTION), args.seed)
        timing = bench_oracle(data.dataset, atlas, max(args.threads))
        logger.info("cascade %.3fs, oracle %.3fs, speedup %.2fx",
                    timing["cascade_seconds"], timing["oracle_seconds"], timing["speedup"])
    return EXIT_OK


def _cmd_stats(args) -> int:
    atlas = load_atlas(args.atlas)
    print(stats_report(read_assignments(args.assignments, atlas), atlas), end="")
    return EXIT_OK


COMMANDS = {
    "segment": _cmd_segment,
    "resample": _cmd_resample,
    "gen-synthetic": _cmd_gen_synthetic,
    "validate": _cmd_validate,
    "bench": _cmd_bench,
    "stats": _cmd_stats,
}


def parse_command(argv: List[str]) -> CommandSpec:
    """Parse argv into a CommandSpec; raises UsageError on any usage problem."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.subcommand is None:
        raise UsageError(parser.format_usage().strip())
    options = {k: v for k, v in vars(args).items() if k != "subcommand"}
    return CommandSpec(subcommand=args.subcommand, options=options)


def run(argv: List[str]) -> int:
    """
    Dispatch one command line.

    Returns:
        0 on success, 1 on usage errors, 2 on data or validation errors
    """
    try:
        command = parse_command(argv)
    except UsageError as e:
        print(str(e), file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:
        # --help
        return int(e.code or 0)

    setup_logging(command.options.get("log_level"))
    args = argparse.Namespace(**command.options)
    try:
        return COMMANDS[command.subcommand](args)
    except UsageError as e:
        print(f"fiberseg {command.subcommand}: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ValidationError as e:
        error = e.errors()[0]
        field = ".".join(str(p) for p in error["loc"])
        print(f"fiberseg {command.subcommand}: error: {field}: {error['msg']}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as e:
        logger.error("file not found: %s", e.filename)
        return EXIT_DATA
    except (FiberSegError, OSError) as e:
        logger.error("%s", e)
        return EXIT_DATA


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
