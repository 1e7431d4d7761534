"""Structural similarity, single scale and multi-scale.

Single-scale SSIM follows the original construction: local statistics under
an 11x11 Gaussian window (sigma 1.5), stabilizers C1 = (0.01*255)^2 and
C2 = (0.03*255)^2, averaged over the positions where the window fits
entirely inside the image.

The multi-scale variant evaluates the contrast-structure component on a
dyadic pyramid (2x2 mean filter, decimate by two) and the full
luminance-weighted score on the coarsest scale, combining them as a
weighted product. Inputs too small for the full five scales use as many
scales as fit, with the weights rescaled to keep their total.
"""

from __future__ import annotations

import numpy as np
from scipy.ndimage import correlate1d

__all__ = ["ssim", "msssim", "MSSSIM_WEIGHTS"]

_WINDOW_SIZE = 11
_SIGMA = 1.5
_C1 = (0.01 * 255) ** 2
_C2 = (0.03 * 255) ** 2

MSSSIM_WEIGHTS = (0.0448, 0.2856, 0.3001, 0.2363, 0.1333)


def _gaussian_taps(size: int = _WINDOW_SIZE, sigma: float = _SIGMA) -> np.ndarray:
    x = np.arange(size, dtype=np.float64) - (size - 1) / 2
    g = np.exp(-(x**2) / (2 * sigma**2))
    return g / g.sum()


_TAPS = _gaussian_taps()


def _window_mean(img: np.ndarray) -> np.ndarray:
    """Separable Gaussian-weighted local mean, valid region only."""
    half = _WINDOW_SIZE // 2
    out = correlate1d(img, _TAPS, axis=0, mode="constant")
    out = correlate1d(out, _TAPS, axis=1, mode="constant")
    return out[half:-half, half:-half]


def _check_pair(a, b, min_side):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"image shapes differ: {a.shape} vs {b.shape}")
    if min(a.shape) < min_side:
        raise ValueError(f"image {a.shape} smaller than {min_side}x{min_side}")
    return a, b


def _components(x: np.ndarray, y: np.ndarray):
    """Mean luminance term and mean contrast-structure term."""
    mu_x = _window_mean(x)
    mu_y = _window_mean(y)
    sxx = _window_mean(x * x) - mu_x * mu_x
    syy = _window_mean(y * y) - mu_y * mu_y
    sxy = _window_mean(x * y) - mu_x * mu_y
    lum = (2 * mu_x * mu_y + _C1) / (mu_x * mu_x + mu_y * mu_y + _C1)
    cs = (2 * sxy + _C2) / (sxx + syy + _C2)
    return float(np.mean(lum * cs)), float(np.mean(cs))


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    """Mean local structural similarity; 1.0 iff the planes are identical."""
    x, y = _check_pair(a, b, _WINDOW_SIZE)
    full, _ = _components(x, y)
    return full


def _downsample2(x: np.ndarray) -> np.ndarray:
    """2x2 mean then decimate by two (edge-replicated on odd sizes)."""
    h, w = x.shape
    p = np.pad(x, ((0, h % 2), (0, w % 2)), mode="edge")
    return (p[0::2, 0::2] + p[1::2, 0::2] + p[0::2, 1::2] + p[1::2, 1::2]) / 4.0


def _scale_count(shape) -> int:
    n = 1
    side = min(shape)
    while n < len(MSSSIM_WEIGHTS) and side // 2 >= _WINDOW_SIZE:
        side //= 2
        n += 1
    return n


def msssim(a: np.ndarray, b: np.ndarray) -> float:
    """Multi-scale structural similarity (weighted product across scales)."""
    x, y = _check_pair(a, b, _WINDOW_SIZE)
    scales = _scale_count(x.shape)
    weights = np.array(MSSSIM_WEIGHTS[:scales])
    weights *= sum(MSSSIM_WEIGHTS) / weights.sum()
    score = 1.0
    for level in range(scales):
        full, cs = _components(x, y)
        if level < scales - 1:
            score *= cs ** weights[level]
            x = _downsample2(x)
            y = _downsample2(y)
        else:
            score *= full ** weights[level]
    return float(score)


class MsssimReference:
    """MS-SSIM against a fixed reference plane with the reference-side
    pyramid and statistics precomputed (for repeated scoring loops)."""

    def __init__(self, plane: np.ndarray):
        x = np.asarray(plane, dtype=np.float64)
        if min(x.shape) < _WINDOW_SIZE:
            raise ValueError(f"image {x.shape} smaller than {_WINDOW_SIZE}x{_WINDOW_SIZE}")
        self._scales = _scale_count(x.shape)
        self._weights = np.array(MSSSIM_WEIGHTS[: self._scales])
        self._weights *= sum(MSSSIM_WEIGHTS) / self._weights.sum()
        self._levels = []
        for _ in range(self._scales):
            mu = _window_mean(x)
            sxx = _window_mean(x * x) - mu * mu
            self._levels.append((x, mu, sxx))
            x = _downsample2(x)

    def score(self, other: np.ndarray) -> float:
        y = np.asarray(other, dtype=np.float64)
        if y.shape != self._levels[0][0].shape:
            raise ValueError(
                f"image shapes differ: {y.shape} vs {self._levels[0][0].shape}"
            )
        result = 1.0
        for level, (x, mu_x, sxx) in enumerate(self._levels):
            mu_y = _window_mean(y)
            syy = _window_mean(y * y) - mu_y * mu_y
            sxy = _window_mean(x * y) - mu_x * mu_y
            cs = float(np.mean((2 * sxy + _C2) / (sxx + syy + _C2)))
            if level < self._scales - 1:
                result *= cs ** self._weights[level]
                y = _downsample2(y)
            else:
                lum_cs = (2 * mu_x * mu_y + _C1) / (mu_x**2 + mu_y**2 + _C1)
                lum_cs *= (2 * sxy + _C2) / (sxx + syy + _C2)
                result *= float(np.mean(lum_cs)) ** self._weights[level]
        return float(result)
