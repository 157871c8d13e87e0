"""Configuration settings for FiberSeg."""

import logging
import os
import sys
from dotenv import load_dotenv

load_dotenv()

# Fiber representation
RESAMPLE_POINTS = 21

# Cascade Configuration
DEFAULT_TEST3_INDICES = tuple(
    int(i) for i in os.getenv("FIBERSEG_TEST3_INDICES", "3,7,13,17").split(",")
)
DEFAULT_WORKERS = os.getenv("FIBERSEG_THREADS", "auto")

# Parallel kernels split the subject into this many contiguous chunks,
# whatever the thread count.
CHUNK_COUNT = int(os.getenv("FIBERSEG_CHUNK_COUNT", "1024"))

# Output formatting
CSV_DISTANCE_DIGITS = 6

# Synthetic generator
MAX_PLACEMENT_ATTEMPTS = int(os.getenv("FIBERSEG_MAX_PLACEMENT_ATTEMPTS", "500"))
PROTOTYPE_SAMPLES = 41
ARC_RADIUS_RANGE = (25.0, 60.0)
ARC_LENGTH_RANGE = (30.0, 80.0)

# Benchmark workloads
BENCH_SIGMA = float(os.getenv("FIBERSEG_BENCH_SIGMA", "0.5"))
BENCH_DISTRACTOR_FRACTION = float(os.getenv("FIBERSEG_BENCH_DISTRACTOR_FRACTION", "0.05"))

# Logging
LOG_LEVEL = os.getenv("FIBERSEG_LOG_LEVEL", "INFO")
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def setup_logging(level: str = None):
    """Send log records to stderr; results never go through logging."""
    logging.basicConfig(
        level=(level or LOG_LEVEL).upper(),
        format=LOG_FORMAT,
        stream=sys.stderr,
        force=True,
    )
