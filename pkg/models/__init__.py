"""Pydantic models and exceptions shared across FiberSeg."""

from models.errors import (
    AssignmentFormatError,
    AtlasError,
    BadMagicError,
    FiberFormatError,
    FiberSegError,
    InvalidFiberError,
    NonFiniteCoordinateError,
    PointCountError,
    SyntheticGenerationError,
    TrailingBytesError,
    TruncatedFileError,
    UnsupportedVersionError,
)
from models.schemas import (
    BENCH_COLUMNS,
    DISTRACTOR,
    STAGE_FIELDS,
    UNASSIGNED,
    Assignment,
    AssignmentTable,
    Atlas,
    AtlasBundle,
    BenchRow,
    CascadeConfig,
    CascadeStats,
    CommandSpec,
    DiscrepancyReport,
    FiberDataset,
    OracleMode,
    Orientation,
    SyntheticSpec,
)

__all__ = [
    "AssignmentFormatError",
    "AtlasError",
    "BadMagicError",
    "FiberFormatError",
    "FiberSegError",
    "InvalidFiberError",
    "NonFiniteCoordinateError",
    "PointCountError",
    "SyntheticGenerationError",
    "TrailingBytesError",
    "TruncatedFileError",
    "UnsupportedVersionError",
    "BENCH_COLUMNS",
    "DISTRACTOR",
    "STAGE_FIELDS",
    "UNASSIGNED",
    "Assignment",
    "AssignmentTable",
    "Atlas",
    "AtlasBundle",
    "BenchRow",
    "CascadeConfig",
    "CascadeStats",
    "CommandSpec",
    "DiscrepancyReport",
    "FiberDataset",
    "OracleMode",
    "Orientation",
    "SyntheticSpec",
]
