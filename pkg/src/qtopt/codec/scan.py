"""Quantization and entropy-coded scan assembly.

The scan encoder exists twice: a numba bit-pump (`_encode_scan_loop`) and a
vectorized numpy path (`_encode_scan_numpy`). They emit byte-identical
streams; which runs is the package-wide backend choice. Both implement the
baseline sequencing: zig-zag order, DC prediction, run-length coding of zero
runs with ZRL/EOB, magnitude-category value bits, 1-padding to a byte
boundary, and 0x00 stuffing after literal 0xFF bytes.
"""

from __future__ import annotations

import numpy as np

from .._accel import NUMBA_ENABLED, njit
from .huffman import AC_CODES, AC_SIZES, DC_CODES, DC_SIZES


def _zigzag_order() -> np.ndarray:
    """Natural (row-major) index of each zig-zag position."""
    order = []
    for s in range(15):
        diag = [(s - j, j) for j in range(s + 1) if s - j < 8 and j < 8]
        if s % 2:
            diag.reverse()  # odd diagonals run top-right to bottom-left
        order.extend(r * 8 + c for r, c in diag)
    return np.array(order, dtype=np.int64)


ZIGZAG = _zigzag_order()

# int64 throughout: the loop kernel must behave identically compiled and
# interpreted, and numpy scalar promotion would otherwise narrow the bit
# accumulator math to the table dtypes.
DC_CODES64 = DC_CODES.astype(np.int64)
DC_SIZES64 = DC_SIZES.astype(np.int64)
AC_CODES64 = AC_CODES.astype(np.int64)
AC_SIZES64 = AC_SIZES.astype(np.int64)

# Worst case per block: DC 9+11 bits, 63 AC at 16+10 bits -> 208 bytes,
# doubled for pathological stuffing.
_MAX_BLOCK_BYTES = 420


def quantize_blocks(coefs: np.ndarray, divisors: np.ndarray) -> np.ndarray:
    """Divide DCT coefficients by the table, rounding half away from zero.

    coefs: (n, 8, 8) float64; divisors: (8, 8) int. Returns (n, 64) int64 in
    natural order. This is the single quantization path shared by the size
    accounting, the file writer, and the reconstruction.
    """
    scaled = coefs / divisors
    q = np.sign(scaled) * np.floor(np.abs(scaled) + 0.5)
    return q.astype(np.int64).reshape(-1, 64)


@njit(cache=True)
def _encode_scan_loop(zz, dc_codes, dc_sizes, ac_codes, ac_sizes, out):
    acc = 0
    nbits = 0
    pos = 0
    pred = 0
    for b in range(zz.shape[0]):
        diff = zz[b, 0] - pred
        pred = zz[b, 0]
        mag = diff if diff >= 0 else -diff
        s = 0
        while mag:
            mag >>= 1
            s += 1
        vb = diff if diff >= 0 else diff + (1 << s) - 1
        acc = (acc << dc_sizes[s]) | dc_codes[s]
        nbits += dc_sizes[s]
        if s:
            acc = (acc << s) | (vb & ((1 << s) - 1))
            nbits += s
        while nbits >= 8:
            nbits -= 8
            byte = (acc >> nbits) & 0xFF
            acc &= (1 << nbits) - 1
            out[pos] = byte
            pos += 1
            if byte == 0xFF:
                out[pos] = 0
                pos += 1

        run = 0
        for k in range(1, 64):
            v = zz[b, k]
            if v == 0:
                run += 1
                continue
            while run > 15:
                acc = (acc << ac_sizes[0xF0]) | ac_codes[0xF0]
                nbits += ac_sizes[0xF0]
                while nbits >= 8:
                    nbits -= 8
                    byte = (acc >> nbits) & 0xFF
                    acc &= (1 << nbits) - 1
                    out[pos] = byte
                    pos += 1
                    if byte == 0xFF:
                        out[pos] = 0
                        pos += 1
                run -= 16
            mag = v if v >= 0 else -v
            s = 0
            while mag:
                mag >>= 1
                s += 1
            rs = (run << 4) | s
            vb = v if v >= 0 else v + (1 << s) - 1
            acc = (acc << ac_sizes[rs]) | ac_codes[rs]
            nbits += ac_sizes[rs]
            acc = (acc << s) | (vb & ((1 << s) - 1))
            nbits += s
            while nbits >= 8:
                nbits -= 8
                byte = (acc >> nbits) & 0xFF
                acc &= (1 << nbits) - 1
                out[pos] = byte
                pos += 1
                if byte == 0xFF:
                    out[pos] = 0
                    pos += 1
            run = 0
        if run > 0:
            acc = (acc << ac_sizes[0]) | ac_codes[0]
            nbits += ac_sizes[0]
            while nbits >= 8:
                nbits -= 8
                byte = (acc >> nbits) & 0xFF
                acc &= (1 << nbits) - 1
                out[pos] = byte
                pos += 1
                if byte == 0xFF:
                    out[pos] = 0
                    pos += 1

    if nbits > 0:
        pad = 8 - nbits
        byte = ((acc << pad) | ((1 << pad) - 1)) & 0xFF
        out[pos] = byte
        pos += 1
        if byte == 0xFF:
            out[pos] = 0
            pos += 1
    return pos


def _bit_category(mag: np.ndarray) -> np.ndarray:
    # bit length of the magnitude: 0 -> 0, 1 -> 1, 2..3 -> 2, ...
    bounds = np.left_shift(np.int64(1), np.arange(11, dtype=np.int64))
    return np.searchsorted(bounds, mag, side="right").astype(np.int64)


def _encode_scan_numpy(zz, dc_codes, dc_sizes, ac_codes, ac_sizes):
    nb = zz.shape[0]
    dc = zz[:, 0]
    diffs = dc.copy()
    diffs[1:] -= dc[:-1]
    s_dc = _bit_category(np.abs(diffs))
    vb_dc = np.where(diffs < 0, diffs + (np.int64(1) << s_dc) - 1, diffs)
    vb_dc &= (np.int64(1) << s_dc) - 1
    dc_merged = (dc_codes[s_dc].astype(np.int64) << s_dc) | vb_dc
    dc_bits = dc_sizes[s_dc].astype(np.int64) + s_dc
    dc_keys = np.arange(nb, dtype=np.int64) * 65 * 8

    ac = zz[:, 1:]
    rows, cols = np.nonzero(ac)
    pos = cols + 1
    vals = ac[rows, cols]
    first = np.ones(len(rows), dtype=bool)
    first[1:] = rows[1:] != rows[:-1]
    prev = np.zeros_like(pos)
    idx = np.flatnonzero(~first)
    prev[idx] = pos[idx - 1]
    gap = pos - prev - 1
    nzrl = gap >> 4
    run = gap & 15

    s_ac = _bit_category(np.abs(vals))
    rs = (run << 4) | s_ac
    vb_ac = np.where(vals < 0, vals + (np.int64(1) << s_ac) - 1, vals)
    vb_ac &= (np.int64(1) << s_ac) - 1
    ac_merged = (ac_codes[rs].astype(np.int64) << s_ac) | vb_ac
    ac_bits = ac_sizes[rs].astype(np.int64) + s_ac
    ac_keys = (rows * 65 + pos) * 8 + nzrl

    total_zrl = int(nzrl.sum())
    jj = np.repeat(np.arange(len(vals)), nzrl)
    sub = np.arange(total_zrl, dtype=np.int64) - np.repeat(
        np.cumsum(nzrl) - nzrl, nzrl
    )
    zrl_keys = (rows[jj] * 65 + pos[jj]) * 8 + sub
    zrl_merged = np.full(total_zrl, int(ac_codes[0xF0]), dtype=np.int64)
    zrl_bits = np.full(total_zrl, int(ac_sizes[0xF0]), dtype=np.int64)

    last_pos = np.zeros(nb, dtype=np.int64)
    if len(rows):
        tail = np.flatnonzero(np.r_[rows[1:] != rows[:-1], True])
        last_pos[rows[tail]] = pos[tail]
    eob_blocks = np.flatnonzero(last_pos < 63)
    eob_keys = (eob_blocks * 65 + 64) * 8
    eob_merged = np.full(len(eob_blocks), int(ac_codes[0]), dtype=np.int64)
    eob_bits = np.full(len(eob_blocks), int(ac_sizes[0]), dtype=np.int64)

    keys = np.concatenate([dc_keys, zrl_keys, ac_keys, eob_keys])
    merged = np.concatenate([dc_merged, zrl_merged, ac_merged, eob_merged])
    bits = np.concatenate([dc_bits, zrl_bits, ac_bits, eob_bits])
    order = np.argsort(keys)
    merged = merged[order]
    bits = bits[order]

    total = int(bits.sum())
    ends = np.cumsum(bits)
    starts = ends - bits
    kk = np.repeat(np.arange(len(bits)), bits)
    shift = bits[kk] - 1 - (np.arange(total, dtype=np.int64) - starts[kk])
    bitstream = ((merged[kk] >> shift) & 1).astype(np.uint8)
    pad = (-total) % 8
    if pad:
        bitstream = np.concatenate([bitstream, np.ones(pad, dtype=np.uint8)])
    packed = np.packbits(bitstream)
    ff = np.flatnonzero(packed == 0xFF)
    if len(ff):
        packed = np.insert(packed, ff + 1, 0)
    return packed


def encode_scan(zz_blocks: np.ndarray) -> np.ndarray:
    """Entropy-code quantized zig-zag blocks (n, 64) into stuffed scan bytes."""
    zz_blocks = np.ascontiguousarray(zz_blocks, dtype=np.int64)
    if NUMBA_ENABLED:
        out = np.empty(zz_blocks.shape[0] * _MAX_BLOCK_BYTES + 8, dtype=np.uint8)
        n = _encode_scan_loop(
            zz_blocks, DC_CODES64, DC_SIZES64, AC_CODES64, AC_SIZES64, out
        )
        return out[:n].copy()
    return _encode_scan_numpy(zz_blocks, DC_CODES64, DC_SIZES64, AC_CODES64, AC_SIZES64)
