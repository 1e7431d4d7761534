"""Feature similarity between two planes: phase congruency plus gradient
magnitude, pooled with max-phase-congruency weighting.

Pipeline per image:

1. optional averaging downsample by F = max(1, round(min(h, w) / 256));
2. phase congruency from a log-Gabor bank (4 scales, 4 orientations,
   minimum wavelength 6, scale multiplier 2, sigma_onf 0.55) with the
   standard median-based noise floor (k = 2, empirical 1/1.7 rescale);
3. gradient magnitude via 3x3 Scharr kernels (zero-padded borders);
4. per-pixel similarity (2ab+T)/(a^2+b^2+T) with T1 = 0.85 for phase
   congruency and T2 = 160 for gradients, multiplied and pooled weighted
   by max(PC_a, PC_b).

Filtering happens in the frequency domain, so boundary handling is
periodic. The log-Gabor bank and the noise-estimate constants depend only
on the image shape and are cached across calls; FsimReference additionally
caches the reference image's PC and gradient maps for scoring loops.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
import scipy.fft as _fft
from scipy.ndimage import convolve

__all__ = ["fsim", "FsimReference", "phase_congruency"]

_NSCALE = 4
_NORIENT = 4
_MIN_WAVELENGTH = 6
_MULT = 2.0
_SIGMA_ONF = 0.55
_D_THETA_SIGMA = 1.2
_NOISE_K = 2.0
_EPSILON = 1e-4
_T1 = 0.85
_T2 = 160.0

_SCHARR_X = np.array([[3, 0, -3], [10, 0, -10], [3, 0, -3]], dtype=np.float64) / 16


def _frequency_grid(rows: int, cols: int):
    if cols % 2:
        xr = (np.arange(cols) - (cols - 1) / 2) / (cols - 1)
    else:
        xr = (np.arange(cols) - cols / 2) / cols
    if rows % 2:
        yr = (np.arange(rows) - (rows - 1) / 2) / (rows - 1)
    else:
        yr = (np.arange(rows) - rows / 2) / rows
    x, y = np.meshgrid(xr, yr)
    radius = np.fft.ifftshift(np.sqrt(x**2 + y**2))
    theta = np.fft.ifftshift(np.arctan2(-y, x))
    radius[0, 0] = 1.0
    return radius, theta


class _FilterBank:
    """Log-Gabor filters and noise-model constants for one image shape."""

    def __init__(self, rows: int, cols: int):
        radius, theta = _frequency_grid(rows, cols)
        sintheta = np.sin(theta)
        costheta = np.cos(theta)

        # Butterworth low-pass keeps the bank away from the Nyquist corners.
        lowpass = 1.0 / (1.0 + (radius / 0.45) ** 30)
        log_gabor = []
        for s in range(_NSCALE):
            f0 = 1.0 / (_MIN_WAVELENGTH * _MULT**s)
            g = np.exp(-(np.log(radius / f0) ** 2) / (2 * np.log(_SIGMA_ONF) ** 2))
            g *= lowpass
            g[0, 0] = 0.0
            log_gabor.append(g)

        theta_sigma = np.pi / _NORIENT / _D_THETA_SIGMA
        spreads = []
        for o in range(_NORIENT):
            angle = o * np.pi / _NORIENT
            ds = sintheta * np.cos(angle) - costheta * np.sin(angle)
            dc = costheta * np.cos(angle) + sintheta * np.sin(angle)
            dtheta = np.abs(np.arctan2(ds, dc))
            spreads.append(np.exp(-(dtheta**2) / (2 * theta_sigma**2)))

        n = rows * cols
        # filters[o, s]: real frequency response for one orientation/scale
        self.filters = np.empty((_NORIENT, _NSCALE, rows, cols))
        self.em_n = np.empty(_NORIENT)        # filter power at finest scale
        self.sum_an2 = np.empty(_NORIENT)     # total squared spatial envelope
        self.sum_aiaj = np.empty(_NORIENT)    # cross products between scales
        for o in range(_NORIENT):
            bank = [log_gabor[s] * spreads[o] for s in range(_NSCALE)]
            ifft_filters = [np.real(np.fft.ifft2(f)) * np.sqrt(n) for f in bank]
            self.filters[o] = bank
            self.em_n[o] = np.sum(bank[0] ** 2)
            self.sum_an2[o] = sum((f**2).sum() for f in ifft_filters)
            cross = 0.0
            for si in range(_NSCALE - 1):
                for sj in range(si + 1, _NSCALE):
                    cross += float((ifft_filters[si] * ifft_filters[sj]).sum())
            self.sum_aiaj[o] = cross
        # single-precision copy for the per-call FFT work (the responses'
        # ~1e-7 relative error is far below metric tolerances)
        self.filters32 = self.filters.reshape(-1, rows, cols).astype(np.float32)


@lru_cache(maxsize=8)
def _filter_bank(rows: int, cols: int) -> _FilterBank:
    return _FilterBank(rows, cols)


def phase_congruency(plane: np.ndarray) -> np.ndarray:
    """Per-pixel phase congruency map in [0, 1]."""
    img = np.asarray(plane, dtype=np.float64)
    rows, cols = img.shape
    bank = _filter_bank(rows, cols)
    spectrum = np.fft.fft2(img).astype(np.complex64)

    responses = _fft.ifft2(spectrum[None] * bank.filters32, axes=(-2, -1), workers=-1)
    responses = responses.reshape(_NORIENT, _NSCALE, rows, cols)
    re = responses.real
    im = responses.imag
    an = np.abs(responses)

    sum_e = re.sum(axis=1)
    sum_o = im.sum(axis=1)
    sum_an = an.sum(axis=1)
    x_energy = np.sqrt(sum_e**2 + sum_o**2) + _EPSILON
    mean_e = (sum_e / x_energy)[:, None]
    mean_o = (sum_o / x_energy)[:, None]
    energy = (re * mean_e + im * mean_o - np.abs(re * mean_o - im * mean_e)).sum(axis=1)

    # Rayleigh noise floor estimated from the finest-scale responses.
    median_e2n = np.median((an[:, 0] ** 2).reshape(_NORIENT, -1), axis=1)
    mean_e2n = -median_e2n / np.log(0.5)
    noise_power = mean_e2n / bank.em_n
    est_noise_energy2 = 2 * noise_power * bank.sum_an2 + 4 * noise_power * bank.sum_aiaj
    tau = np.sqrt(est_noise_energy2 / 2)
    threshold = (tau * np.sqrt(np.pi / 2) + _NOISE_K * np.sqrt((2 - np.pi / 2)) * tau) / 1.7

    energy_all = np.maximum(energy - threshold[:, None, None], 0.0).sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        # featureless (constant) input has zero amplitude everywhere; the
        # map is NaN there, like the reference formulation
        return energy_all / sum_an.sum(axis=0)


def _downsample_average(img: np.ndarray, factor: int) -> np.ndarray:
    """Box-filter (zero-padded, conv-style centering) and take every
    factor-th sample."""
    if factor <= 1:
        return img
    h, w = img.shape
    lead = (factor - 1) // 2
    oh = -(-h // factor)
    ow = -(-w // factor)
    padded = np.zeros((max(lead + h, oh * factor), max(lead + w, ow * factor)))
    padded[lead : lead + h, lead : lead + w] = img
    windows = padded[: oh * factor, : ow * factor]
    return windows.reshape(oh, factor, ow, factor).mean(axis=(1, 3))


def _gradient_magnitude(img: np.ndarray) -> np.ndarray:
    gx = convolve(img, _SCHARR_X, mode="constant")
    gy = convolve(img, _SCHARR_X.T, mode="constant")
    return np.sqrt(gx**2 + gy**2)


def _prepare(plane: np.ndarray):
    img = np.asarray(plane, dtype=np.float64)
    factor = max(1, int(min(img.shape) / 256 + 0.5))  # round half up
    img = _downsample_average(img, factor)
    return phase_congruency(img), _gradient_magnitude(img)


class FsimReference:
    """Feature-similarity scoring against a fixed reference plane.

    Precomputes the reference's phase-congruency and gradient maps once;
    each score() call pays for the candidate side only.
    """

    def __init__(self, plane: np.ndarray):
        plane = np.asarray(plane)
        if plane.ndim != 2:
            raise ValueError("expected a 2-D plane")
        if min(plane.shape) < 32:
            raise ValueError(f"image {plane.shape} smaller than 32x32")
        self._shape = plane.shape
        self._pc, self._gm = _prepare(plane)

    def score(self, other: np.ndarray) -> float:
        other = np.asarray(other)
        if other.shape != self._shape:
            raise ValueError(f"image shapes differ: {other.shape} vs {self._shape}")
        pc2, gm2 = _prepare(other)
        pc_sim = (2 * self._pc * pc2 + _T1) / (self._pc**2 + pc2**2 + _T1)
        gm_sim = (2 * self._gm * gm2 + _T2) / (self._gm**2 + gm2**2 + _T2)
        pc_max = np.maximum(self._pc, pc2)
        return float(np.sum(pc_sim * gm_sim * pc_max) / np.sum(pc_max))


def fsim(a: np.ndarray, b: np.ndarray) -> float:
    """Feature similarity; 1.0 iff the planes are identical."""
    return FsimReference(a).score(b)
