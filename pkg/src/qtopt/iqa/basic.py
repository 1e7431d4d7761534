"""Pixelwise error metrics: RMSE and PSNR."""

from __future__ import annotations

import numpy as np

__all__ = ["rmse", "psnr"]


def _check_pair(a: np.ndarray, b: np.ndarray):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"image shapes differ: {a.shape} vs {b.shape}")
    return a, b


def rmse(a: np.ndarray, b: np.ndarray) -> float:
    """Root mean squared sample difference."""
    a, b = _check_pair(a, b)
    return float(np.sqrt(np.mean((a - b) ** 2)))


def psnr(a: np.ndarray, b: np.ndarray, peak: float = 255.0) -> float:
    """20*log10(peak / RMSE); +inf for identical inputs."""
    r = rmse(a, b)
    if r == 0.0:
        return float("inf")
    return float(20.0 * np.log10(peak / r))
