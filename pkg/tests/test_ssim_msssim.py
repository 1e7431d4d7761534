import numpy as np
import pytest
from skimage.metrics import structural_similarity

from qtopt import codec
from qtopt.iqa import MsssimReference, msssim, ssim
from qtopt.iqa.ssim import _scale_count
from qtopt.qtable import standard_table
from conftest import make_smooth_plane
from reference_impls import msssim_reference


@pytest.fixture(scope="module")
def pairs(photo_corpus):
    out = []
    for i, plane in enumerate(photo_corpus[:3]):
        q = (95, 50, 35)[i]
        out.append((plane, codec.compress(plane, standard_table(), q).reconstructed))
    return out


class TestSsim:
    def test_identity(self, photo256):
        assert ssim(photo256, photo256) == pytest.approx(1.0, abs=1e-9)

    def test_symmetry_exact(self, pairs):
        for a, b in pairs:
            assert ssim(a, b) == ssim(b, a)

    def test_matches_skimage(self, pairs):
        for a, b in pairs:
            ref = structural_similarity(
                a, b, gaussian_weights=True, sigma=1.5,
                use_sample_covariance=False, data_range=255,
            )
            assert ssim(a, b) == pytest.approx(ref, abs=1e-4)

    def test_matches_skimage_64(self, small_pair):
        a, b = small_pair
        ref = structural_similarity(
            a, b, gaussian_weights=True, sigma=1.5,
            use_sample_covariance=False, data_range=255,
        )
        assert ssim(a, b) == pytest.approx(ref, abs=1e-4)

    def test_too_small(self):
        with pytest.raises(ValueError, match="smaller"):
            ssim(np.zeros((10, 64), np.uint8), np.zeros((10, 64), np.uint8))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="shapes"):
            ssim(np.zeros((16, 16), np.uint8), np.zeros((16, 17), np.uint8))


class TestMsssim:
    def test_identity(self, photo256):
        assert msssim(photo256, photo256) == pytest.approx(1.0, abs=1e-9)

    def test_symmetry_exact(self, pairs):
        for a, b in pairs:
            assert msssim(a, b) == msssim(b, a)

    def test_matches_reference(self, pairs):
        for a, b in pairs:
            assert msssim(a, b) == pytest.approx(msssim_reference(a, b), abs=1e-3)

    def test_monotone_in_quality(self, photo256):
        values = [
            msssim(photo256, codec.compress(photo256, standard_table(), q).reconstructed)
            for q in (95, 75, 50, 35)
        ]
        assert values == sorted(values, reverse=True)

    def test_scale_count(self):
        assert _scale_count((256, 256)) == 5
        assert _scale_count((176, 512)) == 5
        assert _scale_count((64, 64)) == 3
        assert _scale_count((11, 11)) == 1

    def test_small_input_uses_fewer_scales(self):
        a = make_smooth_plane(64, 64, 1)
        b = make_smooth_plane(64, 64, 2)
        v = msssim(a, b)
        assert 0.0 < v < 1.0
        # three-scale reference with rescaled weights
        from qtopt.iqa.ssim import MSSSIM_WEIGHTS
        from reference_impls import _imfilter_symmetric_downsample, _ssim_components_reference

        w = np.array(MSSSIM_WEIGHTS[:3])
        w *= sum(MSSSIM_WEIGHTS) / w.sum()
        x, y = a.astype(float), b.astype(float)
        expected = 1.0
        for level in range(3):
            s, cs = _ssim_components_reference(x, y)
            expected *= (s if level == 2 else cs) ** w[level]
            x = _imfilter_symmetric_downsample(x)
            y = _imfilter_symmetric_downsample(y)
        assert v == pytest.approx(expected, abs=1e-3)

    def test_reference_object_matches_function(self, pairs):
        a, b = pairs[0]
        assert MsssimReference(a).score(b) == pytest.approx(msssim(a, b), abs=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="shapes"):
            msssim(np.zeros((32, 32), np.uint8), np.zeros((32, 33), np.uint8))
