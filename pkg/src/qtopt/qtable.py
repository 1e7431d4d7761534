"""Quantization tables: the domain type, the stock luminance table, quality
scaling, text serialization, and table-vs-table diff heat maps.

A table is an 8x8 grid of integer divisors in [1, 255]; cell (0, 0) divides
the DC coefficient. Tables are value objects: immutable, hashable, equality
by content.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "QuantTable",
    "HeatmapDiff",
    "TableParseError",
    "ZeroDivisorWarning",
    "STANDARD_LUMINANCE",
    "standard_table",
    "scale_table",
    "parse_table",
    "serialize_table",
    "diff_heatmap",
]

# Luminance table shipped with the de-facto standard JPEG library; every
# ratio in this package is measured against it.
STANDARD_LUMINANCE = (
    (16, 11, 10, 16, 24, 40, 51, 61),
    (12, 12, 14, 19, 26, 58, 60, 55),
    (14, 13, 16, 24, 40, 57, 69, 56),
    (14, 17, 22, 29, 51, 87, 80, 62),
    (18, 22, 37, 56, 68, 109, 103, 77),
    (24, 35, 55, 64, 81, 104, 113, 92),
    (49, 64, 78, 87, 103, 121, 120, 101),
    (72, 92, 95, 98, 112, 100, 103, 99),
)


class TableParseError(ValueError):
    """Raised for malformed table text; carries 1-based line and column."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class ZeroDivisorWarning(UserWarning):
    """A parsed table contained a 0 divisor that was clamped to 1."""


class QuantTable:
    """8x8 grid of quantization divisors, each in [1, 255]."""

    __slots__ = ("_values",)

    def __init__(self, values):
        arr = np.array(values, dtype=np.int64)
        if arr.size != 64:
            raise ValueError(f"quantization table needs 64 entries, got {arr.size}")
        arr = arr.reshape(8, 8)
        if arr.min() < 1 or arr.max() > 255:
            raise ValueError("quantization divisors must lie in [1, 255]")
        arr.flags.writeable = False
        self._values = arr

    @property
    def values(self) -> np.ndarray:
        """Read-only (8, 8) int64 array, row-major."""
        return self._values

    def flat(self) -> np.ndarray:
        return self._values.reshape(64)

    def __getitem__(self, rc) -> int:
        return int(self._values[rc])

    def __eq__(self, other) -> bool:
        if not isinstance(other, QuantTable):
            return NotImplemented
        return bool(np.array_equal(self._values, other._values))

    def __hash__(self) -> int:
        return hash(self._values.tobytes())

    def __repr__(self) -> str:
        rows = ", ".join(str(list(r)) for r in self._values)
        return f"QuantTable([{rows}])"


def standard_table() -> QuantTable:
    """The stock luminance table (ratio 1.0 reference for the whole package)."""
    return QuantTable(STANDARD_LUMINANCE)


def scale_table(base: QuantTable, quality: int) -> QuantTable:
    """Scale a table by the integer quality formula used by libjpeg.

    quality 50 is the identity; higher sharpens (smaller divisors), lower
    coarsens. Output divisors are clamped to [1, 255].
    """
    quality = int(quality)
    if not 1 <= quality <= 100:
        raise ValueError(f"quality must be in [1, 100], got {quality}")
    scale = 5000 // quality if quality < 50 else 200 - 2 * quality
    scaled = (base.values * scale + 50) // 100
    return QuantTable(np.clip(scaled, 1, 255))


def parse_table(text: str) -> QuantTable:
    """Parse 64 whitespace-separated integers, row-major.

    Lines whose first non-blank character is '#' are comments. A 0 divisor
    is clamped to 1 and reported via ZeroDivisorWarning (0 is not a valid
    baseline JPEG divisor, but tables in circulation do contain it).
    """
    values = []
    positions = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if line.lstrip().startswith("#"):
            continue
        col = 0
        for token in line.split():
            col = line.index(token, col) + 1
            if len(values) >= 64:
                raise TableParseError("more than 64 values", lineno, col)
            try:
                value = int(token)
            except ValueError:
                raise TableParseError(f"not an integer: {token!r}", lineno, col) from None
            if value < 0 or value > 255:
                raise TableParseError(f"value {value} outside [0, 255]", lineno, col)
            values.append(value)
            positions.append((lineno, col))
            col += len(token)
    if len(values) != 64:
        last_line = positions[-1][0] if positions else 1
        raise TableParseError(f"expected 64 values, got {len(values)}", last_line, 1)
    for i, value in enumerate(values):
        if value == 0:
            line, col = positions[i]
            warnings.warn(
                f"divisor 0 at line {line}, column {col} clamped to 1",
                ZeroDivisorWarning,
                stacklevel=2,
            )
            values[i] = 1
    return QuantTable(np.array(values).reshape(8, 8))


def serialize_table(table: QuantTable) -> str:
    """8 rows of 8 right-aligned integers; parse_table round-trips it."""
    lines = []
    for row in table.values:
        lines.append(" ".join(f"{v:3d}" for v in row))
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class HeatmapDiff:
    """Cell-wise signed change candidate - reference, plus normalized
    magnitudes in [0, 1] (1 at the largest absolute change)."""

    deltas: np.ndarray
    intensities: np.ndarray


def diff_heatmap(candidate: QuantTable, reference: QuantTable) -> HeatmapDiff:
    """Signed per-cell difference for heat-map rendering.

    Positive delta = divisor increased (rendered red downstream), negative =
    decreased (blue); intensity is |delta| normalized by the grid maximum.
    """
    deltas = candidate.values - reference.values
    peak = np.abs(deltas).max()
    if peak == 0:
        intensities = np.zeros((8, 8))
    else:
        intensities = np.abs(deltas) / peak
    deltas = deltas.copy()
    deltas.flags.writeable = False
    intensities.flags.writeable = False
    return HeatmapDiff(deltas=deltas, intensities=intensities)
