"""Baseline JFIF container assembly for single-component (grayscale) scans.

Segment order: SOI, APP0/JFIF, DQT, SOF0, DHT (DC + AC in one segment),
SOS, entropy-coded data, EOI. The DQT payload carries the caller's table
bit-exact, in zig-zag order, 8-bit precision.
"""

from __future__ import annotations

import struct

import numpy as np

from ..qtable import QuantTable
from .huffman import AC_LUMA_BITS, AC_LUMA_VALS, DC_LUMA_BITS, DC_LUMA_VALS
from .scan import ZIGZAG

__all__ = ["build_headers", "TRAILER", "parse_dqt"]

_SOI = b"\xff\xd8"
_EOI = b"\xff\xd9"
TRAILER = _EOI


def _segment(marker: int, payload: bytes) -> bytes:
    return struct.pack(">BBH", 0xFF, marker, len(payload) + 2) + payload


def _app0_jfif() -> bytes:
    return _segment(0xE0, b"JFIF\x00" + struct.pack(">BBBHHBB", 1, 1, 0, 1, 1, 0, 0))


def _dqt(table: QuantTable) -> bytes:
    zz = table.flat()[ZIGZAG].astype(np.uint8)
    return _segment(0xDB, b"\x00" + zz.tobytes())


def _sof0(height: int, width: int) -> bytes:
    # 8-bit precision, one component (id 1), 1x1 sampling, table 0.
    return _segment(0xC0, struct.pack(">BHHB", 8, height, width, 1) + b"\x01\x11\x00")


def _dht() -> bytes:
    payload = (
        b"\x00"
        + bytes(DC_LUMA_BITS)
        + bytes(DC_LUMA_VALS)
        + b"\x10"
        + bytes(AC_LUMA_BITS)
        + bytes(AC_LUMA_VALS)
    )
    return _segment(0xC4, payload)


def _sos() -> bytes:
    # one component, DC/AC table 0, full spectral range, no successive approx.
    return _segment(0xDA, b"\x01\x01\x00" + bytes((0, 63, 0)))


def build_headers(height: int, width: int, table: QuantTable) -> bytes:
    """Everything before the entropy-coded data."""
    return _SOI + _app0_jfif() + _dqt(table) + _sof0(height, width) + _dht() + _sos()


def parse_dqt(data: bytes) -> QuantTable:
    """Extract the first DQT table from a JFIF byte stream (for round-trip
    checks against what we wrote)."""
    i = 2
    while i + 4 <= len(data):
        if data[i] != 0xFF:
            raise ValueError(f"marker expected at offset {i}")
        marker = data[i + 1]
        length = struct.unpack(">H", data[i + 2 : i + 4])[0]
        if marker == 0xDB:
            payload = data[i + 4 : i + 2 + length]
            if payload[0] != 0x00:
                raise ValueError("only 8-bit table 0 DQT supported")
            zz = np.frombuffer(payload[1:65], dtype=np.uint8).astype(np.int64)
            natural = np.empty(64, dtype=np.int64)
            natural[ZIGZAG] = zz
            return QuantTable(natural.reshape(8, 8))
        i += 2 + length
    raise ValueError("no DQT segment found")
