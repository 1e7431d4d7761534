import numpy as np
import pytest

from qtopt.iqa import RatioEvaluator, compression_ratio, error_ratio
from qtopt.qtable import QuantTable, standard_table


@pytest.fixture(scope="module")
def evaluator(textured_corpus):
    return RatioEvaluator(textured_corpus, quality=75, metric="fsim")


def test_self_ratio_is_one(evaluator):
    err, comp = evaluator(standard_table())
    assert err == pytest.approx(1.0, abs=1e-12)
    assert comp == pytest.approx(1.0, abs=1e-12)


def test_report_shape(evaluator, textured_corpus):
    report = evaluator.report(standard_table())
    assert report.image_count == len(textured_corpus)
    assert report.error_ratio == pytest.approx(1.0, abs=1e-12)


def test_max_divisor_table(textured_corpus):
    coarse = QuantTable(np.full((8, 8), 255))
    err = error_ratio(textured_corpus[:2], coarse, standard_table(), 75, "fsim")
    comp = compression_ratio(textured_corpus[:2], coarse, standard_table(), 75)
    assert err > 1.0
    assert comp < 1.0


def test_empty_inputs():
    with pytest.raises(ValueError, match="image"):
        RatioEvaluator([], 75, "fsim")
    with pytest.raises(ValueError, match="image"):
        compression_ratio([], standard_table(), standard_table(), 75)


def test_unusable_metric(textured_corpus):
    with pytest.raises(ValueError, match="metric"):
        RatioEvaluator(textured_corpus, 75, "rmse")


def test_degenerate_reference_errors():
    # a constant plane compresses losslessly: reference error sum is zero
    flat = [np.full((64, 64), 128, np.uint8)]
    with pytest.raises(ValueError, match="degenerate"):
        RatioEvaluator(flat, 75, "fsim")


def test_msssim_metric_works(textured_corpus):
    ev = RatioEvaluator(textured_corpus[:2], 75, "msssim")
    err, comp = ev(standard_table())
    assert err == pytest.approx(1.0, abs=1e-12)
    assert comp == pytest.approx(1.0, abs=1e-12)
    coarse = QuantTable(np.clip(standard_table().values * 2, 1, 255))
    err2, comp2 = ev(coarse)
    assert err2 > 1.0
    assert comp2 < 1.0


def test_quality_affects_sizes(textured_corpus):
    ev95 = RatioEvaluator(textured_corpus[:1], 95, "fsim")
    ev35 = RatioEvaluator(textured_corpus[:1], 35, "fsim")
    assert ev95._ref_size_sum > ev35._ref_size_sum
