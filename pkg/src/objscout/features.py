"""Appearance embeddings for proposals and their pairwise similarity.

Two interchangeable sources feed the correspondence graph: a built-in
deterministic descriptor (color histograms plus gradient-orientation
histograms over a fixed 32x32 patch), or precomputed embedding files
written by any external network. Embeddings are plain 1-d float arrays;
all embeddings within a run must share one dimension.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .exceptions import DimMismatchError, ParseError
from .geometry import LUMA_WEIGHTS, BoundingBox, Frame, crop_resize

DESCRIPTOR_DIM = 60

_PATCH = 32
_COLOR_BINS = 8
_ORIENT_BINS = 9
_GRID = 2

EMBEDDING_MAGIC = b"UFOE"
EMBEDDING_SUFFIX = ".emb"
_HEADER = struct.Struct("<4sII")


def extract_descriptor(frame: Frame, box: BoundingBox) -> np.ndarray:
    """Deterministic 60-d appearance descriptor of a box crop.

    The crop is resampled to 32x32. Entries 0..23 are per-channel 8-bin
    color histograms normalized by pixel count; entries 24..59 are
    magnitude-weighted 9-bin gradient-orientation histograms over a 2x2
    grid of the luma patch. The vector is L2-normalized (zero stays zero).
    """
    patch = crop_resize(frame, box, _PATCH, _PATCH)
    vec = np.empty(DESCRIPTOR_DIM)

    npix = _PATCH * _PATCH
    for c in range(3):
        bins = np.minimum((patch[:, :, c] * _COLOR_BINS).astype(np.int64), _COLOR_BINS - 1)
        vec[c * _COLOR_BINS : (c + 1) * _COLOR_BINS] = (
            np.bincount(bins.ravel(), minlength=_COLOR_BINS) / npix
        )

    luma = patch @ np.asarray(LUMA_WEIGHTS)
    gy, gx = np.gradient(luma)
    mag = np.hypot(gx, gy)
    # unsigned orientation in [0, pi)
    orient = np.mod(np.arctan2(gy, gx), np.pi)
    obin = np.minimum((orient / np.pi * _ORIENT_BINS).astype(np.int64), _ORIENT_BINS - 1)

    offset = 3 * _COLOR_BINS
    cell = _PATCH // _GRID
    for gy_idx in range(_GRID):
        for gx_idx in range(_GRID):
            rows = slice(gy_idx * cell, (gy_idx + 1) * cell)
            cols = slice(gx_idx * cell, (gx_idx + 1) * cell)
            vec[offset : offset + _ORIENT_BINS] = np.bincount(
                obin[rows, cols].ravel(),
                weights=mag[rows, cols].ravel(),
                minlength=_ORIENT_BINS,
            )
            offset += _ORIENT_BINS

    norm = np.linalg.norm(vec)
    return vec / norm if norm > 0.0 else vec


def similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity in [-1, 1]; zero vectors compare as 0."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimMismatchError(f"embedding dims differ: {a.shape} vs {b.shape}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.clip(a @ b / (na * nb), -1.0, 1.0))


def similarity_matrix(rows_a: np.ndarray, rows_b: np.ndarray) -> np.ndarray:
    """Pairwise cosine similarities between two stacks of embeddings."""
    a = np.atleast_2d(np.asarray(rows_a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(rows_b, dtype=np.float64))
    if a.shape[1] != b.shape[1]:
        raise DimMismatchError(f"embedding dims differ: {a.shape[1]} vs {b.shape[1]}")
    na = np.linalg.norm(a, axis=1, keepdims=True)
    nb = np.linalg.norm(b, axis=1, keepdims=True)
    an = np.divide(a, na, out=np.zeros_like(a), where=na > 0.0)
    bn = np.divide(b, nb, out=np.zeros_like(b), where=nb > 0.0)
    return np.clip(an @ bn.T, -1.0, 1.0)


def embedding_path(directory: str | Path, frame_index: int) -> Path:
    """File holding one frame's embeddings: <dir>/<index, 5 digits>.emb."""
    return Path(directory) / f"{frame_index:05d}{EMBEDDING_SUFFIX}"


def read_embedding_file(path: str | Path, expected_dim: int | None = None) -> np.ndarray:
    """Read one binary embedding file into an (n, dim) float array.

    Layout, little-endian: magic "UFOE", u32 count, u32 dim, then
    count*dim float32 values row-major. Row order is preserved and no
    renormalization is applied.
    """
    blob = Path(path).read_bytes()
    if len(blob) < _HEADER.size:
        raise ParseError(f"{path}: truncated header ({len(blob)} bytes)")
    magic, count, dim = _HEADER.unpack_from(blob)
    if magic != EMBEDDING_MAGIC:
        raise ParseError(f"{path}: bad magic {magic!r}")
    if count > 0 and dim == 0:
        raise ParseError(f"{path}: zero-dimensional embeddings")
    expected_bytes = _HEADER.size + count * dim * 4
    if len(blob) != expected_bytes:
        raise ParseError(
            f"{path}: expected {expected_bytes} bytes for {count}x{dim} floats, got {len(blob)}"
        )
    if expected_dim is not None and count > 0 and dim != expected_dim:
        raise DimMismatchError(f"{path}: file dim {dim} differs from run dim {expected_dim}")
    rows = np.frombuffer(blob, dtype="<f4", offset=_HEADER.size)
    return rows.reshape(count, dim).astype(np.float64)


def load_embeddings(
    directory: str | Path, frame_index: int, expected_dim: int | None = None
) -> np.ndarray:
    """Read the embeddings of one frame from a per-frame file directory."""
    return read_embedding_file(embedding_path(directory, frame_index), expected_dim)


def write_embedding_file(path: str | Path, rows: np.ndarray) -> None:
    """Write an (n, dim) array in the binary embedding layout."""
    rows = np.atleast_2d(np.asarray(rows, dtype=np.float32))
    count, dim = rows.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(EMBEDDING_MAGIC, count, dim))
        fh.write(rows.astype("<f4").tobytes())
