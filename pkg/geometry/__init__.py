"""Numeric kernel: fiber resampling, lengths and distance metrics."""

from geometry.metrics import (
    chord_length,
    d_me,
    length_penalty,
    max_pointwise_distance,
    normalized_distance,
    oriented_max_distance,
    point_distance,
    tn,
)
from geometry.resampling import (
    fiber_lengths,
    polyline_length,
    resample,
    resample_dataset,
    reverse_fiber,
)

__all__ = [
    "chord_length",
    "d_me",
    "length_penalty",
    "max_pointwise_distance",
    "normalized_distance",
    "oriented_max_distance",
    "point_distance",
    "tn",
    "fiber_lengths",
    "polyline_length",
    "resample",
    "resample_dataset",
    "reverse_fiber",
]
