"""IDX image ingestion, normalization to [0,1]^d, and seeded subsampling."""

import gzip
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    DimensionMismatchError,
    MagicMismatchError,
    SampleTooLargeError,
    TrailingBytesWarning,
    TruncatedError,
)
from .rng import make_rng

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801


@dataclass(frozen=True)
class ImageSet:
    """Raw images as parsed from an IDX file: one row per image, byte values."""

    images: np.ndarray  # (n_total, rows*cols) uint8
    rows: int
    cols: int
    labels: np.ndarray | None = None  # optional metadata, never used by the solver

    def __post_init__(self):
        self.images.setflags(write=False)

    @property
    def n_total(self) -> int:
        return self.images.shape[0]

    @property
    def d(self) -> int:
        return self.rows * self.cols


@dataclass(frozen=True)
class SampleMatrix:
    """n points of the compact sample space, entries in [0,1]."""

    samples: np.ndarray  # (n, d) float

    def __post_init__(self):
        if self.samples.ndim != 2 or self.samples.shape[0] < 1:
            raise ValueError("samples must be a nonempty 2-D array")
        self.samples.setflags(write=False)

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    @property
    def d(self) -> int:
        return self.samples.shape[1]


def parse_idx(data: bytes) -> ImageSet:
    """Parse a big-endian IDX 3-D unsigned-byte tensor (images file)."""
    if len(data) < 4:
        raise TruncatedError("missing magic number: only %d bytes" % len(data))
    magic = int.from_bytes(data[:4], "big")
    if magic != IMAGES_MAGIC:
        raise MagicMismatchError(
            "expected magic 0x%08x, got 0x%08x" % (IMAGES_MAGIC, magic)
        )
    if len(data) < 16:
        raise TruncatedError("header truncated: %d bytes" % len(data))
    n_total = int.from_bytes(data[4:8], "big")
    rows = int.from_bytes(data[8:12], "big")
    cols = int.from_bytes(data[12:16], "big")
    expected = n_total * rows * cols
    payload = data[16:]
    if len(payload) < expected:
        raise TruncatedError(
            "payload has %d bytes, header promises %d" % (len(payload), expected)
        )
    if len(payload) > expected:
        warnings.warn(
            "%d trailing bytes ignored" % (len(payload) - expected),
            TrailingBytesWarning,
        )
    images = np.frombuffer(payload[:expected], dtype=np.uint8).reshape(n_total, rows * cols)
    return ImageSet(images=images, rows=rows, cols=cols)


def parse_idx_labels(data: bytes) -> np.ndarray:
    """Parse a big-endian IDX 1-D unsigned-byte tensor (labels file)."""
    if len(data) < 4:
        raise TruncatedError("missing magic number: only %d bytes" % len(data))
    magic = int.from_bytes(data[:4], "big")
    if magic != LABELS_MAGIC:
        raise MagicMismatchError(
            "expected magic 0x%08x, got 0x%08x" % (LABELS_MAGIC, magic)
        )
    if len(data) < 8:
        raise TruncatedError("header truncated: %d bytes" % len(data))
    n = int.from_bytes(data[4:8], "big")
    payload = data[8:]
    if len(payload) < n:
        raise TruncatedError("payload has %d bytes, header promises %d" % (len(payload), n))
    if len(payload) > n:
        warnings.warn("%d trailing bytes ignored" % (len(payload) - n), TrailingBytesWarning)
    return np.frombuffer(payload[:n], dtype=np.uint8).copy()


def write_idx(imgset: ImageSet) -> bytes:
    """Serialize an ImageSet back to IDX bytes (inverse of parse_idx)."""
    header = (
        IMAGES_MAGIC.to_bytes(4, "big")
        + imgset.n_total.to_bytes(4, "big")
        + imgset.rows.to_bytes(4, "big")
        + imgset.cols.to_bytes(4, "big")
    )
    return header + imgset.images.astype(np.uint8).tobytes()


def _read_maybe_gzip(path) -> bytes:
    raw = Path(path).read_bytes()
    if raw[:2] == b"\x1f\x8b":
        return gzip.decompress(raw)
    return raw


def load_images(path, labels_path=None) -> ImageSet:
    """Read an IDX images file (gzip accepted), optionally attaching labels."""
    imgset = parse_idx(_read_maybe_gzip(path))
    if labels_path is not None:
        labels = parse_idx_labels(_read_maybe_gzip(labels_path))
        if len(labels) != imgset.n_total:
            raise DimensionMismatchError(
                "%d labels for %d images" % (len(labels), imgset.n_total)
            )
        imgset = ImageSet(
            images=imgset.images, rows=imgset.rows, cols=imgset.cols, labels=labels
        )
    return imgset


def normalize(imgset: ImageSet) -> SampleMatrix:
    """Map raw byte intensities to [0,1] by dividing by 255."""
    return SampleMatrix(samples=imgset.images.astype(np.float64) / 255.0)


def subsample(data: SampleMatrix, n: int, seed: int) -> SampleMatrix:
    """Draw n distinct rows uniformly at random, deterministically in seed.

    Partial Fisher-Yates over indices: O(n) work and exactly uniform over
    n-subsets.
    """
    if not 1 <= n <= data.n:
        raise SampleTooLargeError("cannot draw %d of %d rows" % (n, data.n))
    rng = make_rng(seed)
    idx = np.arange(data.n)
    offsets = rng.integers(0, data.n - np.arange(n))
    for i in range(n):
        j = i + int(offsets[i])
        idx[i], idx[j] = idx[j], idx[i]
    return SampleMatrix(samples=data.samples[idx[:n]].copy())


def nearest_neighbor(data: SampleMatrix, b: np.ndarray) -> int:
    """Index of the row closest to b in Euclidean norm; ties go to the smallest index."""
    b = np.asarray(b, dtype=np.float64)
    if b.shape != (data.d,):
        raise DimensionMismatchError(
            "query has shape %s, rows have length %d" % (b.shape, data.d)
        )
    diff = data.samples - b
    dist2 = np.einsum("ij,ij->i", diff, diff)
    return int(np.argmin(dist2))
