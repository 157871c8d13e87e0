"""Pydantic schemas for fibers, atlases, segmentation results and tool settings."""

import math
from enum import Enum, IntEnum
from typing import Dict, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PositiveInt, field_validator, model_validator

from config import DEFAULT_TEST3_INDICES, DEFAULT_WORKERS, RESAMPLE_POINTS

UNASSIGNED = -1
# Ground-truth label of generated negatives; equal to UNASSIGNED so that
# label arrays compare directly against segmentation output.
DISTRACTOR = -1


class Orientation(IntEnum):
    """Point pairing between a fiber and a centroid."""
    DIRECT = 0
    INVERSE = 1


class OracleMode(str, Enum):
    """Reference semantics used by the brute-force oracle."""
    ENDPOINT = "endpoint-orientation"
    EXACT = "exact"


class FiberDataset(BaseModel):
    """Fibers packed as one float32 point array plus per-fiber offsets."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    points: np.ndarray = Field(description="(P, 3) float32 coordinates in mm")
    offsets: np.ndarray = Field(description="(N + 1,) int64 start offsets into points")
    source_path: str = ""

    @field_validator("points")
    @classmethod
    def _check_points(cls, v: np.ndarray) -> np.ndarray:
        if v.ndim != 2 or v.shape[1] != 3:
            raise ValueError(f"points must have shape (P, 3), got {v.shape}")
        return np.ascontiguousarray(v, dtype=np.float32)

    @field_validator("offsets")
    @classmethod
    def _check_offsets(cls, v: np.ndarray) -> np.ndarray:
        if v.ndim != 1 or v.shape[0] < 1:
            raise ValueError("offsets must be a non-empty 1-D array")
        return np.ascontiguousarray(v, dtype=np.int64)

    @model_validator(mode="after")
    def _check_layout(self):
        if self.offsets[0] != 0 or self.offsets[-1] != self.points.shape[0]:
            raise ValueError("offsets must start at 0 and end at the point count")
        counts = np.diff(self.offsets)
        if counts.size and counts.min() < 2:
            bad = int(np.argmax(counts < 2))
            raise ValueError(f"fiber {bad} has {int(counts[bad])} points, at least 2 required")
        return self

    @classmethod
    def from_fibers(cls, fibers: Sequence[np.ndarray], source_path: str = "") -> "FiberDataset":
        """Pack a list of (n_i, 3) arrays."""
        counts = np.array([len(f) for f in fibers], dtype=np.int64)
        offsets = np.zeros(len(fibers) + 1, dtype=np.int64)
        np.cumsum(counts, out=offsets[1:])
        if fibers:
            points = np.concatenate([np.asarray(f, dtype=np.float32).reshape(-1, 3) for f in fibers])
        else:
            points = np.zeros((0, 3), dtype=np.float32)
        return cls(points=points, offsets=offsets, source_path=source_path)

    @classmethod
    def from_array(cls, fibers: np.ndarray, source_path: str = "") -> "FiberDataset":
        """Wrap an (N, n, 3) array of equal-length fibers without copying."""
        n_fibers, n_points, _ = fibers.shape
        offsets = np.arange(n_fibers + 1, dtype=np.int64) * n_points
        return cls(points=fibers.reshape(-1, 3), offsets=offsets, source_path=source_path)

    def __len__(self) -> int:
        return self.offsets.shape[0] - 1

    @property
    def point_counts(self) -> np.ndarray:
        return np.diff(self.offsets)

    def fiber(self, index: int) -> np.ndarray:
        return self.points[self.offsets[index]:self.offsets[index + 1]]

    def uniform_point_count(self) -> Optional[int]:
        """Point count shared by every fiber, or None for ragged datasets."""
        counts = self.point_counts
        if counts.size == 0 or counts.min() != counts.max():
            return None
        return int(counts[0])

    def is_resampled(self, n_points: int = RESAMPLE_POINTS) -> bool:
        return self.uniform_point_count() == n_points

    def as_array(self) -> np.ndarray:
        """(N, n, 3) view of an equal-length dataset."""
        n_points = self.uniform_point_count()
        if n_points is None:
            raise ValueError("dataset fibers have different point counts")
        return self.points.reshape(len(self), n_points, 3)

    def subset(self, indices: np.ndarray) -> "FiberDataset":
        if self.uniform_point_count() is not None:
            return FiberDataset.from_array(self.as_array()[indices], self.source_path)
        return FiberDataset.from_fibers([self.fiber(int(i)) for i in indices], self.source_path)


class AtlasBundle(BaseModel):
    """A named bundle: centroid fibers plus the bundle's distance threshold."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    name: str
    threshold: float = Field(gt=0, description="Acceptance threshold in mm")
    centroids: np.ndarray = Field(description="(C, 21, 3) float32 centroid points")

    @field_validator("name")
    @classmethod
    def _check_name(cls, v: str) -> str:
        if not v or any(ch.isspace() for ch in v):
            raise ValueError(f"bundle name must be non-empty without whitespace: {v!r}")
        if any(ch in "/\\" for ch in v) or v in (".", ".."):
            raise ValueError(f"bundle name must be usable as a file name: {v!r}")
        return v

    @field_validator("threshold")
    @classmethod
    def _check_threshold(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("threshold must be finite")
        return v

    @field_validator("centroids")
    @classmethod
    def _check_centroids(cls, v: np.ndarray) -> np.ndarray:
        if v.ndim != 3 or v.shape[0] < 1 or v.shape[1:] != (RESAMPLE_POINTS, 3):
            raise ValueError(f"centroids must have shape (C>=1, {RESAMPLE_POINTS}, 3), got {v.shape}")
        return np.ascontiguousarray(v, dtype=np.float32)


class Atlas(BaseModel):
    """Ordered bundles; bundle_index everywhere refers to this order."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    bundles: List[AtlasBundle]

    @model_validator(mode="after")
    def _check_bundles(self):
        names = [b.name for b in self.bundles]
        duplicates = sorted({n for n in names if names.count(n) > 1})
        if duplicates:
            raise ValueError(f"duplicate bundle names: {', '.join(duplicates)}")
        if not self.bundles:
            raise ValueError("atlas has no bundles")
        return self

    @property
    def names(self) -> List[str]:
        return [b.name for b in self.bundles]

    @property
    def n_centroids(self) -> int:
        return sum(b.centroids.shape[0] for b in self.bundles)

    def __len__(self) -> int:
        return len(self.bundles)


class Assignment(BaseModel):
    """Classification of one subject fiber."""
    fiber_index: int = Field(ge=0)
    bundle_index: int = Field(ge=UNASSIGNED)
    distance: Optional[float] = None

    @property
    def assigned(self) -> bool:
        return self.bundle_index != UNASSIGNED


class AssignmentTable(BaseModel):
    """Columnar per-fiber results: O(N) storage, one slot per subject fiber."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    bundle_index: np.ndarray = Field(description="(N,) int32, UNASSIGNED for rejected fibers")
    distance: np.ndarray = Field(description="(N,) float64, inf for rejected fibers")

    @model_validator(mode="after")
    def _check_columns(self):
        if self.bundle_index.shape != self.distance.shape or self.bundle_index.ndim != 1:
            raise ValueError("bundle_index and distance must be 1-D arrays of equal length")
        return self

    def __len__(self) -> int:
        return self.bundle_index.shape[0]

    def __getitem__(self, index: int) -> Assignment:
        label = int(self.bundle_index[index])
        distance = float(self.distance[index]) if label != UNASSIGNED else None
        return Assignment(fiber_index=index, bundle_index=label, distance=distance)

    def counts(self, n_bundles: int) -> np.ndarray:
        """Per-bundle fiber tallies."""
        assigned = self.bundle_index[self.bundle_index != UNASSIGNED]
        return np.bincount(assigned, minlength=n_bundles)

    @property
    def unassigned_count(self) -> int:
        return int(np.count_nonzero(self.bundle_index == UNASSIGNED))

    def same_as(self, other: "AssignmentTable") -> bool:
        """Exact equality of labels and of scores of assigned fibers."""
        if not np.array_equal(self.bundle_index, other.bundle_index):
            return False
        mask = self.bundle_index != UNASSIGNED
        return bool(np.array_equal(self.distance[mask], other.distance[mask]))


class CascadeConfig(BaseModel):
    """Settings of the discard cascade and of its worker pool."""
    test3_indices: Tuple[int, int, int, int] = DEFAULT_TEST3_INDICES
    worker_count: Union[PositiveInt, Literal["auto"]] = "auto"

    @field_validator("worker_count", mode="before")
    @classmethod
    def _parse_workers(cls, v):
        if isinstance(v, str) and v.strip().isdigit():
            return int(v)
        return v

    @field_validator("test3_indices")
    @classmethod
    def _check_indices(cls, v: Tuple[int, int, int, int]) -> Tuple[int, int, int, int]:
        last = RESAMPLE_POINTS - 1
        center = last // 2
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("test3 indices must be strictly increasing")
        if any(i < 1 or i >= last or i == center for i in v):
            raise ValueError(f"test3 indices must lie in 1..{last - 1} and exclude {center}")
        if {last - i for i in v} != set(v):
            raise ValueError("test3 indices must be symmetric under reversal")
        return v


# Order of the per-stage tally columns used by the numba kernels.
STAGE_FIELDS = (
    "discarded_test1",
    "discarded_test2",
    "discarded_test3",
    "discarded_test4_dme",
    "discarded_test4_tn",
    "accepted",
)


class CascadeStats(BaseModel):
    """Per-stage outcome counters of the (fiber, centroid) pairs."""
    pairs_total: int = Field(default=0, ge=0)
    discarded_test1: int = Field(default=0, ge=0)
    discarded_test2: int = Field(default=0, ge=0)
    discarded_test3: int = Field(default=0, ge=0)
    discarded_test4_dme: int = Field(default=0, ge=0)
    discarded_test4_tn: int = Field(default=0, ge=0)
    accepted: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def _check_total(self):
        outcomes = sum(getattr(self, f) for f in STAGE_FIELDS)
        if outcomes != self.pairs_total:
            raise ValueError(f"stage counters sum to {outcomes}, expected {self.pairs_total}")
        return self

    @classmethod
    def from_tallies(cls, tallies: np.ndarray) -> "CascadeStats":
        """Reduce a (chunks, 6) tally array in column order of STAGE_FIELDS."""
        totals = np.asarray(tallies, dtype=np.int64).reshape(-1, len(STAGE_FIELDS)).sum(axis=0)
        values = {f: int(t) for f, t in zip(STAGE_FIELDS, totals)}
        return cls(pairs_total=int(totals.sum()), **values)

    def merge(self, other: "CascadeStats") -> "CascadeStats":
        return CascadeStats(**{k: getattr(self, k) + getattr(other, k) for k in CascadeStats.model_fields})

    def discard_fractions(self) -> Dict[str, float]:
        total = self.pairs_total or 1
        return {
            "discard_t1": self.discarded_test1 / total,
            "discard_t2": self.discarded_test2 / total,
            "discard_t3": self.discarded_test3 / total,
            "discard_t4": (self.discarded_test4_dme + self.discarded_test4_tn) / total,
            "accepted": self.accepted / total,
        }


class SyntheticSpec(BaseModel):
    """Parameters of a generated atlas plus subject with ground truth."""
    bundle_count: int = Field(ge=1)
    centroids_per_bundle: int = Field(ge=1)
    fibers_per_bundle: int = Field(ge=0)
    distractor_count: int = Field(ge=0)
    sigma: float = Field(ge=0, description="Per-point Gaussian noise of member fibers, mm")
    separation: float = Field(gt=0, description="Minimum prototype-to-prototype distance, mm")
    threshold: float = Field(gt=0, description="Threshold assigned to every bundle, mm")
    seed: int = Field(ge=0, lt=2 ** 64)
    centroid_jitter: Optional[float] = Field(default=None, ge=0, description="Control-point perturbation of centroids, mm")

    @model_validator(mode="after")
    def _check_separation(self):
        if self.separation <= 2 * self.threshold:
            raise ValueError("separation must exceed twice the threshold")
        return self

    @property
    def jitter(self) -> float:
        return self.threshold / 8 if self.centroid_jitter is None else self.centroid_jitter


class DiscrepancyReport(BaseModel):
    """Disagreement between two assignment sequences of equal length."""
    total: int = Field(ge=0)
    matching: int = Field(ge=0)
    label_mismatches: int = Field(ge=0, description="Both assigned, different bundles")
    assignment_mismatches: int = Field(ge=0, description="Assigned in one, unassigned in the other")
    max_score_difference: float = Field(ge=0, description="Largest |score| gap among matching assigned fibers")

    @model_validator(mode="after")
    def _check_total(self):
        if self.matching + self.label_mismatches + self.assignment_mismatches != self.total:
            raise ValueError("matching and mismatch counts must sum to total")
        return self

    @property
    def mismatches(self) -> int:
        return self.label_mismatches + self.assignment_mismatches

    def render(self) -> str:
        rate = self.mismatches / self.total if self.total else 0.0
        return "\n".join([
            f"total fibers: {self.total}",
            f"matching assignments: {self.matching}",
            f"label mismatches: {self.label_mismatches}",
            f"assigned-vs-unassigned mismatches: {self.assignment_mismatches}",
            f"max score difference: {self.max_score_difference:.6g}",
            f"discrepancy rate: {rate:.6g}",
        ])


BENCH_COLUMNS = (
    "fibers", "workers", "seconds", "peak_bytes",
    "discard_t1", "discard_t2", "discard_t3", "discard_t4", "accepted",
)


class BenchRow(BaseModel):
    """One (fiber count, worker count) benchmark measurement."""
    fibers: int = Field(ge=0)
    workers: int = Field(ge=1)
    seconds: float = Field(ge=0)
    peak_bytes: int = Field(ge=0)
    input_bytes: int = Field(default=0, ge=0, description="Peak growth up to the loaded subject; not written to CSV")
    aux_bytes: int = Field(default=0, ge=0, description="Peak growth during segmentation; not written to CSV")
    discard_t1: float
    discard_t2: float
    discard_t3: float
    discard_t4: float
    accepted: float

    def csv_values(self) -> List[str]:
        return [
            str(self.fibers), str(self.workers), f"{self.seconds:.6f}", str(self.peak_bytes),
            f"{self.discard_t1:.6f}", f"{self.discard_t2:.6f}", f"{self.discard_t3:.6f}",
            f"{self.discard_t4:.6f}", f"{self.accepted:.6f}",
        ]


class CommandSpec(BaseModel):
    """A parsed command line: one subcommand plus its validated options."""
    subcommand: Literal["segment", "resample", "gen-synthetic", "validate", "bench", "stats"]
    options: Dict[str, object] = Field(default_factory=dict)
