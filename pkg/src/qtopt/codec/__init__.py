"""Baseline JPEG luminance encode path with a pluggable quantization table.

Public operations:

* reconstruct(plane, table)   -- what a baseline decoder shows for our file
* entropy_size(plane, table)  -- complete JFIF byte count, no file written
* emit_jfif(plane, table, p)  -- write the actual file
* compress(plane, table, q)   -- quality-scaled reconstruct + size

All paths quantize through the same code, so the emitted file and the
in-memory reconstruction can never disagree.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from ..qtable import QuantTable, scale_table
from . import jfif
from .dct import forward_dct_blocks, idct_islow_blocks
from .scan import ZIGZAG, encode_scan, quantize_blocks

__all__ = [
    "CompressionResult",
    "reconstruct",
    "entropy_size",
    "emit_jfif",
    "compress",
    "plane_to_blocks",
    "blocks_to_plane",
]


@dataclass(frozen=True)
class CompressionResult:
    """Reconstructed plane plus the byte size of the equivalent JFIF file."""

    reconstructed: np.ndarray
    size_bytes: int


def _check_plane(plane: np.ndarray) -> np.ndarray:
    plane = np.asarray(plane)
    if plane.ndim != 2 or plane.dtype != np.uint8:
        raise ValueError("expected a 2-D uint8 plane")
    if plane.shape[0] < 8 or plane.shape[1] < 8:
        raise ValueError(f"plane {plane.shape} too small, need at least 8x8")
    return plane


def plane_to_blocks(plane: np.ndarray) -> np.ndarray:
    """Pad to multiples of 8 by edge replication and split into (n, 8, 8)
    blocks in scan order (left to right, top to bottom)."""
    h, w = plane.shape
    ph = (-h) % 8
    pw = (-w) % 8
    if ph or pw:
        plane = np.pad(plane, ((0, ph), (0, pw)), mode="edge")
    hb = plane.shape[0] // 8
    wb = plane.shape[1] // 8
    return plane.reshape(hb, 8, wb, 8).swapaxes(1, 2).reshape(-1, 8, 8)


def blocks_to_plane(blocks: np.ndarray, height: int, width: int) -> np.ndarray:
    """Reassemble scan-ordered blocks and crop the replication padding."""
    hb = (height + 7) // 8
    wb = (width + 7) // 8
    plane = blocks.reshape(hb, wb, 8, 8).swapaxes(1, 2).reshape(hb * 8, wb * 8)
    return np.ascontiguousarray(plane[:height, :width])


def _quantized(plane: np.ndarray, table: QuantTable) -> np.ndarray:
    """(n, 64) int64 quantized coefficients in natural order; the single
    quantization path behind every public operation."""
    blocks = plane_to_blocks(plane).astype(np.float64) - 128.0
    coefs = forward_dct_blocks(blocks)
    return quantize_blocks(coefs, table.values)


def reconstruct(plane: np.ndarray, table: QuantTable) -> np.ndarray:
    """Quantize and decode back to samples, matching a third-party baseline
    decoder of our emitted file sample-exact (integer islow inverse DCT)."""
    plane = _check_plane(plane)
    q = _quantized(plane, table)
    deq = q * table.flat()[None, :]
    samples = idct_islow_blocks(deq)
    return blocks_to_plane(samples.reshape(-1, 8, 8), *plane.shape)


def entropy_size(plane: np.ndarray, table: QuantTable) -> int:
    """Byte length of the complete JFIF stream for this (plane, table)."""
    plane = _check_plane(plane)
    q = _quantized(plane, table)
    scan = encode_scan(q[:, ZIGZAG])
    headers = jfif.build_headers(plane.shape[0], plane.shape[1], table)
    return len(headers) + len(scan) + len(jfif.TRAILER)


def emit_jfif(plane: np.ndarray, table: QuantTable, path: str | os.PathLike) -> int:
    """Write the baseline JFIF file; returns bytes written."""
    plane = _check_plane(plane)
    q = _quantized(plane, table)
    scan = encode_scan(q[:, ZIGZAG])
    headers = jfif.build_headers(plane.shape[0], plane.shape[1], table)
    with open(path, "wb") as fh:
        fh.write(headers)
        fh.write(scan.tobytes())
        fh.write(jfif.TRAILER)
    return len(headers) + len(scan) + len(jfif.TRAILER)


def compress(plane: np.ndarray, table: QuantTable, quality: int) -> CompressionResult:
    """Quality-scale the table, then reconstruct and measure in one pass."""
    plane = _check_plane(plane)
    scaled = scale_table(table, quality)
    q = _quantized(plane, scaled)
    deq = q * scaled.flat()[None, :]
    samples = idct_islow_blocks(deq)
    scan = encode_scan(q[:, ZIGZAG])
    headers = jfif.build_headers(plane.shape[0], plane.shape[1], scaled)
    size = len(headers) + len(scan) + len(jfif.TRAILER)
    return CompressionResult(
        reconstructed=blocks_to_plane(samples.reshape(-1, 8, 8), *plane.shape),
        size_bytes=size,
    )
