"""8-bit PGM/PPM reading and writing.

Throughout the package an image plane is a 2-D numpy uint8 array of shape
(height, width), row-major. Color PPM input is converted to a luma plane on
load; everything downstream (codec, metrics, annealing) is single-channel.
"""

from __future__ import annotations

import os

import numpy as np

__all__ = ["ImageFormatError", "load_image", "save_pgm", "save_ppm", "rgb_to_luma"]


class ImageFormatError(ValueError):
    """Input bytes are not an 8-bit binary PGM/PPM we can use."""


def rgb_to_luma(rgb: np.ndarray) -> np.ndarray:
    """BT.601 luma: Y = round(0.299 R + 0.587 G + 0.114 B), clamped to [0, 255]."""
    rgb = rgb.astype(np.float64)
    y = 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]
    return np.clip(np.rint(y), 0, 255).astype(np.uint8)


def _read_header_tokens(data: bytes, count: int, pos: int):
    """Read `count` whitespace-separated header tokens, honoring '#' comments."""
    tokens = []
    n = len(data)
    while len(tokens) < count:
        while pos < n and data[pos : pos + 1].isspace():
            pos += 1
        if pos >= n:
            raise ImageFormatError("truncated netpbm header")
        if data[pos : pos + 1] == b"#":
            while pos < n and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos : pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    return tokens, pos


def load_image(path: str | os.PathLike) -> np.ndarray:
    """Load a binary PGM (P5) or PPM (P6) file as a luma plane.

    Raises FileNotFoundError for a missing file and ImageFormatError for
    unsupported magic numbers, maxval != 255, or truncated raster data.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 2:
        raise ImageFormatError(f"{path}: not a netpbm file")
    magic = data[:2]
    if magic not in (b"P5", b"P6"):
        raise ImageFormatError(
            f"{path}: unsupported magic {magic!r} (need binary P5 or P6)"
        )
    tokens, pos = _read_header_tokens(data, 3, 2)
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError:
        raise ImageFormatError(f"{path}: non-integer netpbm header field") from None
    if width <= 0 or height <= 0:
        raise ImageFormatError(f"{path}: bad dimensions {width}x{height}")
    if maxval != 255:
        raise ImageFormatError(f"{path}: maxval {maxval} unsupported (8-bit only)")
    pos += 1  # single whitespace byte after the header
    channels = 1 if magic == b"P5" else 3
    expected = width * height * channels
    raster = np.frombuffer(data, dtype=np.uint8, count=-1, offset=pos)
    if raster.size < expected:
        raise ImageFormatError(
            f"{path}: raster has {raster.size} bytes, expected {expected}"
        )
    raster = raster[:expected]
    if channels == 1:
        return raster.reshape(height, width).copy()
    return rgb_to_luma(raster.reshape(height, width, 3))


def save_pgm(path: str | os.PathLike, plane: np.ndarray) -> None:
    """Write a plane as binary PGM (P5, maxval 255)."""
    plane = np.ascontiguousarray(plane, dtype=np.uint8)
    if plane.ndim != 2:
        raise ValueError("PGM output needs a 2-D plane")
    height, width = plane.shape
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (width, height))
        fh.write(plane.tobytes())


def save_ppm(path: str | os.PathLike, rgb: np.ndarray) -> None:
    """Write an (h, w, 3) uint8 array as binary PPM (P6, maxval 255)."""
    rgb = np.ascontiguousarray(rgb, dtype=np.uint8)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValueError("PPM output needs an (h, w, 3) array")
    height, width = rgb.shape[:2]
    with open(path, "wb") as fh:
        fh.write(b"P6\n%d %d\n255\n" % (width, height))
        fh.write(rgb.tobytes())
