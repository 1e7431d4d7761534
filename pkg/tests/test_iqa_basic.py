import math

import numpy as np
import pytest

from qtopt.iqa import MetricScore, psnr, rmse, score


def test_rmse_identity():
    x = np.arange(64, dtype=np.uint8).reshape(8, 8)
    assert rmse(x, x) == 0.0


def test_rmse_single_pixel():
    assert rmse(np.array([[0]], np.uint8), np.array([[255]], np.uint8)) == 255.0


def test_rmse_hand_value():
    a = np.array([[0, 255]], np.uint8)
    b = np.array([[255, 255]], np.uint8)
    assert rmse(a, b) == pytest.approx(255 / math.sqrt(2), abs=1e-9)
    assert rmse(a, b) == pytest.approx(180.312, abs=1e-3)


def test_rmse_dimension_mismatch():
    with pytest.raises(ValueError, match="shapes"):
        rmse(np.zeros((2, 2), np.uint8), np.zeros((2, 3), np.uint8))


def test_psnr_zero_db():
    assert psnr(np.array([[0]], np.uint8), np.array([[255]], np.uint8)) == pytest.approx(0.0)


def test_psnr_identical_is_infinite():
    x = np.full((4, 4), 7, np.uint8)
    assert psnr(x, x) == float("inf")


def test_psnr_40_db():
    # rmse of 2.55 -> 40 dB
    a = np.zeros((100, 100))
    b = np.full((100, 100), 2.55)
    assert psnr(a, b) == pytest.approx(40.0, abs=1e-9)


def test_psnr_decreasing_in_rmse():
    a = np.zeros((10, 10))
    values = [psnr(a, np.full((10, 10), v)) for v in (1.0, 2.0, 4.0, 8.0)]
    assert values == sorted(values, reverse=True)
    assert len(set(values)) == 4


def test_score_wrapper():
    x = np.full((16, 16), 9, np.uint8)
    s = score("RMSE", x, x)
    assert s == MetricScore("rmse", 0.0)
    assert not s.flagged


def test_score_unknown_metric():
    with pytest.raises(ValueError, match="unknown metric"):
        score("vif", np.zeros((4, 4)), np.zeros((4, 4)))


def test_flagged_out_of_range():
    assert MetricScore("ssim", -0.2).flagged
    assert not MetricScore("ssim", 0.5).flagged
    assert not MetricScore("psnr", 55.0).flagged
