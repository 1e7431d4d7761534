"""Shared fixtures: deterministic synthetic image corpora.

Two families of test images:

* photo_plane: real photographs from skimage.data, resized to a target
  side and converted to luma — natural DCT statistics for codec and
  metric tests;
* textured_plane: smooth structures plus fine print-like texture and
  grain — content whose bit cost concentrates in the frequency bands the
  perceptual metrics weight least, which is where a quantization-table
  search has real room to move (akin to raw sensor captures).
"""

import numpy as np
import pytest
from scipy.ndimage import gaussian_filter


def make_photo_plane(name: str, side: int = 256) -> np.ndarray:
    import skimage.data as skd
    from skimage.transform import resize

    from qtopt.netpbm import rgb_to_luma

    img = getattr(skd, name)()
    if img.ndim == 3:
        img = rgb_to_luma(img)
    img = resize(img.astype(np.float64), (side, side), anti_aliasing=True, preserve_range=True)
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def make_textured_plane(h: int, w: int, seed: int) -> np.ndarray:
    r = np.random.default_rng(seed)
    base = gaussian_filter(r.normal(0, 1, (h, w)), 12) * 70 + 128
    yy, xx = np.mgrid[0:h, 0:w]
    base += 25 * np.sin(xx / 23 + r.uniform(0, 6)) + 15 * np.cos(yy / 31 + r.uniform(0, 6))
    base[int(h * 0.5) : int(h * 0.5) + 4, :] -= 50
    base[:, int(w * 0.3) : int(w * 0.3) + 3] += 45
    amp = np.clip(gaussian_filter(r.normal(0, 1, (h, w)), 20) * 22 + 12, 0, 26)
    mod2 = np.clip(gaussian_filter(r.normal(0, 1, (h, w)), 25) * 18 + 8, 0, 20)
    img = (
        base
        + amp * ((-1.0) ** (xx + yy))
        + mod2 * ((-1.0) ** xx)
        + r.normal(0, 5, (h, w))
    )
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def make_smooth_plane(h: int, w: int, seed: int) -> np.ndarray:
    r = np.random.default_rng(seed)
    base = gaussian_filter(r.normal(0, 1, (h, w)), 8) * 120
    yy, xx = np.mgrid[0:h, 0:w]
    img = 100 + base + 40 * xx / max(w, 1) + 30 * yy / max(h, 1)
    img += gaussian_filter(r.normal(0, 1, (h, w)), 1.5) * 25
    img[h // 4 : h // 2, w // 3 : w // 3 + 6] += 70
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


_PHOTO_NAMES = ("camera", "astronaut", "coins", "moon", "rocket")


@pytest.fixture(scope="session")
def photo256():
    """One real 256x256 luma photo (camera)."""
    return make_photo_plane("camera", 256)


@pytest.fixture(scope="session")
def photo_corpus():
    """Five real 256x256 luma photos."""
    return [make_photo_plane(n, 256) for n in _PHOTO_NAMES]


@pytest.fixture(scope="session")
def textured_corpus():
    """Five textured 256x256 planes (annealing training corpus)."""
    return [make_textured_plane(256, 256, s) for s in range(5)]


@pytest.fixture(scope="session")
def small_pair():
    """A 64x64 plane and a mildly distorted partner."""
    a = make_smooth_plane(64, 64, 9)
    rng = np.random.default_rng(10)
    b = np.clip(a.astype(int) + rng.integers(-6, 7, a.shape), 0, 255).astype(np.uint8)
    return a, b
