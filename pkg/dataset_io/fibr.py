"""Reader and writer for FIBR binary fiber files.

Layout (little-endian)::

    b"FIBR"                     magic
    uint32                      format version (1)
    uint32                      fiber count
    per fiber:
        uint32                  point count (>= 2)
        float32[count * 3]      x, y, z of every point, in mm

Every field after the magic is four bytes wide, so the body is handled as a
single array of 32-bit words; coordinates are moved as raw words, which keeps
read/write round trips bit-exact.
"""

import logging
import os
import struct

import numba
import numpy as np

from models.errors import (
    BadMagicError,
    FiberFormatError,
    NonFiniteCoordinateError,
    PointCountError,
    TrailingBytesError,
    TruncatedFileError,
    UnsupportedVersionError,
)
from models.schemas import FiberDataset

logger = logging.getLogger(__name__)

MAGIC = b"FIBR"
VERSION = 1
HEADER = struct.Struct("<4sII")
WORD = 4

# Status codes returned by the offset scanner.
_OK = 0
_TRUNCATED = 1
_BAD_COUNT = 2

_EXPONENT_BITS = 0x7F800000


@numba.njit(cache=True, nogil=True)
def _scan_counts(words, n_fibers):
    """
    Walk the per-fiber point counts without allocating.

    Returns (status, word position); on failure the word position locates
    the offending field, on success it is the end of the last fiber.
    """
    pos = 0
    for _ in range(n_fibers):
        if pos >= words.shape[0]:
            return _TRUNCATED, pos
        count = np.int64(words[pos])
        if count < 2:
            return _BAD_COUNT, pos
        if pos + 1 + 3 * count > words.shape[0]:
            return _TRUNCATED, pos + 1
        pos += 1 + 3 * count
    return _OK, pos


@numba.njit(cache=True, nogil=True)
def _point_offsets(words, n_fibers):
    """Point offsets of a body whose counts already passed ``_scan_counts``."""
    offsets = np.zeros(n_fibers + 1, dtype=np.int64)
    pos = 0
    for i in range(n_fibers):
        count = np.int64(words[pos])
        offsets[i + 1] = offsets[i] + count
        pos += 1 + 3 * count
    return offsets


@numba.njit(cache=True, nogil=True)
def _pack_coordinates(words, offsets):
    """
    Shift every coordinate word left over the count fields, in place.

    Afterwards ``words[:3 * P]`` holds the x, y, z words of all points in
    file order. Returns (fiber, word) of the first non-finite coordinate, or
    (-1, -1).
    """
    src = 0
    dst = 0
    for i in range(offsets.shape[0] - 1):
        src += 1
        for _ in range(3 * (offsets[i + 1] - offsets[i])):
            w = words[src]
            if w & _EXPONENT_BITS == _EXPONENT_BITS:
                return i, src
            words[dst] = w
            src += 1
            dst += 1
    return -1, -1


def _count_positions(offsets: np.ndarray) -> np.ndarray:
    """Word index of each fiber's point-count field within the body."""
    n = offsets.shape[0] - 1
    return np.arange(n, dtype=np.int64) + 3 * offsets[:-1]


def read_fiber_file(path: str) -> FiberDataset:
    """
    Read a FIBR file.

    The body is read once into a word array and the coordinates are packed
    inside it, so reading needs about one file size of memory.

    Args:
        path: file to read

    Returns:
        FiberDataset with fibers in file order and bit-identical coordinates

    Raises:
        BadMagicError, UnsupportedVersionError, TruncatedFileError,
        PointCountError, NonFiniteCoordinateError, TrailingBytesError:
        each names the byte offset of the problem
    """
    with open(path, "rb") as fh:
        file_size = os.fstat(fh.fileno()).st_size
        head = fh.read(HEADER.size)
        if len(head) < HEADER.size:
            if len(head) >= 4 and head[:4] != MAGIC:
                raise BadMagicError(f"{path}: bad magic {head[:4]!r}", 0)
            raise TruncatedFileError(f"{path}: header is {len(head)} bytes, expected {HEADER.size}", len(head))
        magic, version, n_fibers = HEADER.unpack(head)
        if magic != MAGIC:
            raise BadMagicError(f"{path}: bad magic {magic!r}", 0)
        if version != VERSION:
            raise UnsupportedVersionError(f"{path}: unsupported format version {version}", 4)
        if n_fibers == 0:
            raise FiberFormatError(f"{path}: file holds no fibers", 8)

        body_bytes = file_size - HEADER.size
        words = np.fromfile(fh, dtype="<u4", count=body_bytes // WORD)

    # counts are checked before anything is sized from the header's fiber count
    status, pos = _scan_counts(words, n_fibers)
    if status == _BAD_COUNT:
        raise PointCountError(
            f"{path}: fiber has {int(words[pos])} points, at least 2 required",
            HEADER.size + WORD * int(pos),
        )
    if status == _TRUNCATED:
        raise TruncatedFileError(f"{path}: payload ends mid-fiber", file_size)
    if pos * WORD != body_bytes:
        raise TrailingBytesError(f"{path}: {body_bytes - pos * WORD} unexpected trailing bytes",
                                 HEADER.size + WORD * int(pos))
    offsets = _point_offsets(words, n_fibers)

    fiber, word = _pack_coordinates(words, offsets)
    if fiber >= 0:
        raise NonFiniteCoordinateError(
            f"{path}: non-finite coordinate in fiber {fiber}", HEADER.size + WORD * int(word)
        )
    points = words[: 3 * int(offsets[-1])].view("<f4").reshape(-1, 3)

    logger.debug("Read %d fibers (%d points) from %s", n_fibers, points.shape[0], path)
    return FiberDataset(points=points, offsets=offsets, source_path=str(path))


def encode_fibers(dataset: FiberDataset) -> bytes:
    """Serialize a dataset to FIBR bytes."""
    n_fibers = len(dataset)
    if n_fibers == 0:
        raise FiberFormatError("refusing to encode an empty dataset", 8)
    counts = dataset.point_counts
    body = np.empty(n_fibers + 3 * dataset.points.shape[0], dtype="<u4")
    positions = _count_positions(dataset.offsets)
    coord_mask = np.ones(body.shape[0], dtype=bool)
    coord_mask[positions] = False
    body[positions] = counts
    body[coord_mask] = dataset.points.astype("<f4", copy=False).view("<u4").ravel()
    return HEADER.pack(MAGIC, VERSION, n_fibers) + body.tobytes()


def write_fiber_file(dataset: FiberDataset, path: str) -> None:
    """
    Write a dataset as a FIBR file.

    Raises:
        FiberFormatError: the dataset is empty
        OSError: the file cannot be written
    """
    payload = encode_fibers(dataset)
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(payload)
    logger.debug("Wrote %d fibers to %s", len(dataset), path)
