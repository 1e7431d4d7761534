"""Full-reference image quality metrics and aggregate ratios.

Metric functions take two planes (2-D uint8 or float arrays of equal
shape) and return a float. `score()` wraps them with the metric id for
typed surfaces like the CLI.
"""

from __future__ import annotations

from dataclasses import dataclass

from .basic import psnr, rmse
from .fsim import FsimReference, fsim
from .ratios import RatioEvaluator, RatioReport, compression_ratio, error_ratio
from .ssim import MsssimReference, msssim, ssim

__all__ = [
    "rmse",
    "psnr",
    "ssim",
    "msssim",
    "fsim",
    "MetricScore",
    "METRICS",
    "score",
    "FsimReference",
    "MsssimReference",
    "RatioEvaluator",
    "RatioReport",
    "error_ratio",
    "compression_ratio",
]

METRICS = {
    "rmse": rmse,
    "psnr": psnr,
    "ssim": ssim,
    "msssim": msssim,
    "fsim": fsim,
}


@dataclass(frozen=True)
class MetricScore:
    """A metric value labeled with its metric id."""

    metric_id: str
    value: float

    @property
    def flagged(self) -> bool:
        """True when a similarity score left its nominal [0, 1] range
        (possible for SSIM under contrast inversion)."""
        if self.metric_id in ("ssim", "msssim", "fsim"):
            return not 0.0 <= self.value <= 1.0
        return False


def score(metric_id: str, a, b) -> MetricScore:
    """Evaluate a metric by id (case-insensitive)."""
    key = metric_id.lower()
    if key not in METRICS:
        raise ValueError(f"unknown metric {metric_id!r}; choose from {sorted(METRICS)}")
    return MetricScore(key, METRICS[key](a, b))
