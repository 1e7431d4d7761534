"""Block DCT kernels.

Two transforms live here:

* an orthonormal float DCT-II pair (forward_dct_block / inverse_dct_block)
  used on the encode side, matching the textbook definition to ~1e-15;
* an integer inverse DCT that reproduces, bit for bit, the fixed-point
  "slow integer" algorithm used by libjpeg-family decoders. Reconstructions
  therefore match what a third-party decoder produces from our files,
  sample-exact.

The integer IDCT has a numba loop form and a vectorized numpy form; both
give identical bytes (the all-AC-zero shortcuts are exact algebraic
specializations of the full butterfly, so skipping them changes nothing).
"""

from __future__ import annotations

import numpy as np

from .._accel import NUMBA_ENABLED, njit

__all__ = [
    "dct_matrix",
    "forward_dct_block",
    "inverse_dct_block",
    "forward_dct_blocks",
    "idct_islow_blocks",
]


def dct_matrix() -> np.ndarray:
    """Orthonormal 8-point DCT-II basis; row u is the u-th cosine."""
    u = np.arange(8).reshape(8, 1)
    x = np.arange(8).reshape(1, 8)
    c = np.cos((2 * x + 1) * u * np.pi / 16) / 2
    c[0, :] = 1 / np.sqrt(8)
    return c


_C = dct_matrix()


def forward_dct_block(block: np.ndarray) -> np.ndarray:
    """2-D DCT-II of one 8x8 block (input already level-shifted)."""
    return _C @ np.asarray(block, dtype=np.float64) @ _C.T


def inverse_dct_block(coefs: np.ndarray) -> np.ndarray:
    """Float inverse of forward_dct_block (round-trip error ~1e-15)."""
    return _C.T @ np.asarray(coefs, dtype=np.float64) @ _C


def forward_dct_blocks(blocks: np.ndarray) -> np.ndarray:
    """Batched forward DCT: (n, 8, 8) level-shifted blocks -> coefficients."""
    return np.einsum("ij,bjk,lk->bil", _C, blocks, _C, optimize=True)


# Fixed-point constants, 13 fractional bits (CONST_BITS), as in the slow
# integer IDCT of libjpeg. PASS1_BITS = 2.
_F_0_298631336 = 2446
_F_0_390180644 = 3196
_F_0_541196100 = 4433
_F_0_765366865 = 6270
_F_0_899976223 = 7373
_F_1_175875602 = 9633
_F_1_501321110 = 12299
_F_1_847759065 = 15137
_F_1_961570560 = 16069
_F_2_053119869 = 16819
_F_2_562915447 = 20995
_F_3_072711026 = 25172


@njit(cache=True, inline="always")
def _range_limit(x):
    # libjpeg's wrap-around range-limit table: clamp(x + 128, 0, 255) for
    # x in [-512, 511], with indices taken mod 1024 outside that window.
    j = x & 1023
    if j < 128:
        return 128 + j
    if j < 512:
        return 255
    if j < 896:
        return 0
    return j - 896


@njit(cache=True)
def _idct_islow_loop(deq, out):
    """deq: (n, 64) int64 dequantized coefficients in natural order.
    out: (n, 64) uint8 spatial samples."""
    ws = np.empty(64, dtype=np.int64)
    for b in range(deq.shape[0]):
        blk = deq[b]
        # Pass 1: columns, output scaled up by 2**PASS1_BITS.
        for col in range(8):
            if (
                blk[col + 8]
                | blk[col + 16]
                | blk[col + 24]
                | blk[col + 32]
                | blk[col + 40]
                | blk[col + 48]
                | blk[col + 56]
            ) == 0:
                dcval = blk[col] << 2
                for r in range(8):
                    ws[col + 8 * r] = dcval
                continue

            z2 = blk[col + 16]
            z3 = blk[col + 48]
            z1 = (z2 + z3) * _F_0_541196100
            t2 = z1 - z3 * _F_1_847759065
            t3 = z1 + z2 * _F_0_765366865

            z2 = blk[col]
            z3 = blk[col + 32]
            t0 = (z2 + z3) << 13
            t1 = (z2 - z3) << 13

            s10 = t0 + t3
            s13 = t0 - t3
            s11 = t1 + t2
            s12 = t1 - t2

            t0 = blk[col + 56]
            t1 = blk[col + 40]
            t2 = blk[col + 24]
            t3 = blk[col + 8]
            z1 = t0 + t3
            z2 = t1 + t2
            z3 = t0 + t2
            z4 = t1 + t3
            z5 = (z3 + z4) * _F_1_175875602
            t0 = t0 * _F_0_298631336
            t1 = t1 * _F_2_053119869
            t2 = t2 * _F_3_072711026
            t3 = t3 * _F_1_501321110
            z1 = -z1 * _F_0_899976223
            z2 = -z2 * _F_2_562915447
            z3 = -z3 * _F_1_961570560 + z5
            z4 = -z4 * _F_0_390180644 + z5
            t0 += z1 + z3
            t1 += z2 + z4
            t2 += z2 + z3
            t3 += z1 + z4

            ws[col] = (s10 + t3 + 1024) >> 11
            ws[col + 56] = (s10 - t3 + 1024) >> 11
            ws[col + 8] = (s11 + t2 + 1024) >> 11
            ws[col + 48] = (s11 - t2 + 1024) >> 11
            ws[col + 16] = (s12 + t1 + 1024) >> 11
            ws[col + 40] = (s12 - t1 + 1024) >> 11
            ws[col + 24] = (s13 + t0 + 1024) >> 11
            ws[col + 32] = (s13 - t0 + 1024) >> 11

        # Pass 2: rows, final descale by 2**(CONST_BITS + PASS1_BITS + 3).
        for row in range(8):
            o = 8 * row
            if (
                ws[o + 1] | ws[o + 2] | ws[o + 3] | ws[o + 4]
                | ws[o + 5] | ws[o + 6] | ws[o + 7]
            ) == 0:
                dc = _range_limit((ws[o] + 16) >> 5)
                for c in range(8):
                    out[b, o + c] = dc
                continue

            z2 = ws[o + 2]
            z3 = ws[o + 6]
            z1 = (z2 + z3) * _F_0_541196100
            t2 = z1 - z3 * _F_1_847759065
            t3 = z1 + z2 * _F_0_765366865

            t0 = (ws[o] + ws[o + 4]) << 13
            t1 = (ws[o] - ws[o + 4]) << 13

            s10 = t0 + t3
            s13 = t0 - t3
            s11 = t1 + t2
            s12 = t1 - t2

            t0 = ws[o + 7]
            t1 = ws[o + 5]
            t2 = ws[o + 3]
            t3 = ws[o + 1]
            z1 = t0 + t3
            z2 = t1 + t2
            z3 = t0 + t2
            z4 = t1 + t3
            z5 = (z3 + z4) * _F_1_175875602
            t0 = t0 * _F_0_298631336
            t1 = t1 * _F_2_053119869
            t2 = t2 * _F_3_072711026
            t3 = t3 * _F_1_501321110
            z1 = -z1 * _F_0_899976223
            z2 = -z2 * _F_2_562915447
            z3 = -z3 * _F_1_961570560 + z5
            z4 = -z4 * _F_0_390180644 + z5
            t0 += z1 + z3
            t1 += z2 + z4
            t2 += z2 + z3
            t3 += z1 + z4

            out[b, o] = _range_limit((s10 + t3 + 131072) >> 18)
            out[b, o + 7] = _range_limit((s10 - t3 + 131072) >> 18)
            out[b, o + 1] = _range_limit((s11 + t2 + 131072) >> 18)
            out[b, o + 6] = _range_limit((s11 - t2 + 131072) >> 18)
            out[b, o + 2] = _range_limit((s12 + t1 + 131072) >> 18)
            out[b, o + 5] = _range_limit((s12 - t1 + 131072) >> 18)
            out[b, o + 3] = _range_limit((s13 + t0 + 131072) >> 18)
            out[b, o + 4] = _range_limit((s13 - t0 + 131072) >> 18)


def _range_limit_np(x: np.ndarray) -> np.ndarray:
    j = x & 1023
    return np.where(
        j < 128, 128 + j, np.where(j < 512, 255, np.where(j < 896, 0, j - 896))
    )


def _butterfly_np(even0, even4, even2, even6, odd7, odd5, odd3, odd1, shift):
    """One 8-point islow butterfly over leading axes; returns 8 outputs."""
    z1 = (even2 + even6) * _F_0_541196100
    t2 = z1 - even6 * _F_1_847759065
    t3 = z1 + even2 * _F_0_765366865
    t0 = (even0 + even4) << 13
    t1 = (even0 - even4) << 13
    s10 = t0 + t3
    s13 = t0 - t3
    s11 = t1 + t2
    s12 = t1 - t2

    z1 = odd7 + odd1
    z2 = odd5 + odd3
    z3 = odd7 + odd3
    z4 = odd5 + odd1
    z5 = (z3 + z4) * _F_1_175875602
    t0 = odd7 * _F_0_298631336
    t1 = odd5 * _F_2_053119869
    t2 = odd3 * _F_3_072711026
    t3 = odd1 * _F_1_501321110
    z1 = -z1 * _F_0_899976223
    z2 = -z2 * _F_2_562915447
    z3 = -z3 * _F_1_961570560 + z5
    z4 = -z4 * _F_0_390180644 + z5
    t0 += z1 + z3
    t1 += z2 + z4
    t2 += z2 + z3
    t3 += z1 + z4

    half = np.int64(1) << (shift - 1)
    return (
        (s10 + t3 + half) >> shift,
        (s11 + t2 + half) >> shift,
        (s12 + t1 + half) >> shift,
        (s13 + t0 + half) >> shift,
        (s13 - t0 + half) >> shift,
        (s12 - t1 + half) >> shift,
        (s11 - t2 + half) >> shift,
        (s10 - t3 + half) >> shift,
    )


def _idct_islow_numpy(deq: np.ndarray) -> np.ndarray:
    """Vectorized islow IDCT; deq (n, 64) int64 -> (n, 64) uint8.

    The zero-AC shortcuts of the loop form are exact specializations of the
    full butterfly, so the unconditional computation is bit-identical.
    """
    d = deq.reshape(-1, 8, 8)
    cols = _butterfly_np(
        d[:, 0, :], d[:, 4, :], d[:, 2, :], d[:, 6, :],
        d[:, 7, :], d[:, 5, :], d[:, 3, :], d[:, 1, :],
        shift=11,
    )
    ws = np.stack(cols, axis=1)  # (n, 8, 8): pass-1 output rows
    rows = _butterfly_np(
        ws[:, :, 0], ws[:, :, 4], ws[:, :, 2], ws[:, :, 6],
        ws[:, :, 7], ws[:, :, 5], ws[:, :, 3], ws[:, :, 1],
        shift=18,
    )
    out = np.stack(rows, axis=2)  # (n, 8, 8)
    return _range_limit_np(out).astype(np.uint8).reshape(-1, 64)


def idct_islow_blocks(deq: np.ndarray) -> np.ndarray:
    """Integer inverse DCT of dequantized blocks.

    deq: (n, 64) int64, natural (row-major) coefficient order. Returns
    (n, 64) uint8 spatial samples (level shift and clamp included).
    """
    deq = np.ascontiguousarray(deq, dtype=np.int64)
    if NUMBA_ENABLED:
        out = np.empty(deq.shape, dtype=np.uint8)
        _idct_islow_loop(deq, out)
        return out
    return _idct_islow_numpy(deq)
