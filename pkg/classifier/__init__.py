"""Four-stage discard cascade and parallel segmentation."""

from classifier.segmenter import PackedAtlas, classify_fiber, pack_atlas, segment
from classifier.workers import chunk_bounds, resolve_workers, worker_threads

__all__ = [
    "PackedAtlas",
    "classify_fiber",
    "pack_atlas",
    "segment",
    "chunk_bounds",
    "resolve_workers",
    "worker_threads",
]
