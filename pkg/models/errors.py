"""Exceptions raised by FiberSeg."""


class FiberSegError(Exception):
    """Base class for every data or validation failure."""


class InvalidFiberError(FiberSegError):
    """A fiber violates the polyline invariants (too few points, zero length)."""


class FiberFormatError(FiberSegError):
    """A FIBR file could not be parsed."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at byte offset {offset}")
        self.offset = offset


class BadMagicError(FiberFormatError):
    pass


class UnsupportedVersionError(FiberFormatError):
    pass


class TruncatedFileError(FiberFormatError):
    pass


class PointCountError(FiberFormatError):
    pass


class NonFiniteCoordinateError(FiberFormatError):
    pass


class TrailingBytesError(FiberFormatError):
    pass


class AtlasError(FiberSegError):
    """The atlas directory or its manifest is unusable."""


class AssignmentFormatError(FiberSegError):
    """An assignment CSV does not match the expected layout."""


class SyntheticGenerationError(FiberSegError):
    """The generator could not honour the requested separation."""
