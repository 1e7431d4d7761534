"""Aggregate error and compression ratios against a reference table.

Both ratios are defined over a set of original images at one quality:

    error ratio       = sum(1 - metric(orig, candidate recon))
                      / sum(1 - metric(orig, reference recon))
    compression ratio = sum(candidate sizes) / sum(reference sizes)

1.0 means parity with the reference (conventionally the stock table);
lower is better on both axes. Sums use compensated summation so results
depend only on the input order, not on how work was batched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import codec
from ..qtable import QuantTable, standard_table
from .fsim import FsimReference
from .ssim import MsssimReference

__all__ = ["RatioReport", "error_ratio", "compression_ratio", "RatioEvaluator"]

_REFERENCE_METRICS = {"fsim": FsimReference, "msssim": MsssimReference}


@dataclass(frozen=True)
class RatioReport:
    """Error and compression ratios over one image set (1.0 = parity)."""

    error_ratio: float
    compression_ratio: float
    image_count: int


class RatioEvaluator:
    """Evaluates candidate tables over a fixed image set at one quality.

    The reference-side work (reconstructions, sizes, metric precomputation
    on the originals) happens once in the constructor; each call costs one
    compress + one metric evaluation per image. Deterministic for a fixed
    table: same inputs, same float operations, same result.
    """

    def __init__(
        self,
        originals,
        quality: int,
        metric: str = "fsim",
        reference: QuantTable | None = None,
    ):
        originals = list(originals)
        if not originals:
            raise ValueError("need at least one image")
        metric = metric.lower()
        if metric not in _REFERENCE_METRICS:
            raise ValueError(
                f"metric {metric!r} not usable for ratios (need fsim or msssim)"
            )
        self.quality = int(quality)
        self.metric = metric
        self.reference = reference if reference is not None else standard_table()
        self._planes = [np.asarray(p) for p in originals]
        self._scorers = [_REFERENCE_METRICS[metric](p) for p in self._planes]

        ref_errors = []
        ref_sizes = []
        for plane, scorer in zip(self._planes, self._scorers):
            result = codec.compress(plane, self.reference, self.quality)
            ref_errors.append(1.0 - scorer.score(result.reconstructed))
            ref_sizes.append(result.size_bytes)
        self._ref_error_sum = math.fsum(ref_errors)
        self._ref_size_sum = float(sum(ref_sizes))
        if not self._ref_error_sum > 0.0 or not math.isfinite(self._ref_error_sum):
            raise ValueError(
                "degenerate image set: reference compression is metrically "
                "perfect or featureless"
            )

    def __len__(self) -> int:
        return len(self._planes)

    def __call__(self, table: QuantTable) -> tuple[float, float]:
        """(error ratio, compression ratio) for one candidate table."""
        errors = []
        size_sum = 0
        for plane, scorer in zip(self._planes, self._scorers):
            result = codec.compress(plane, table, self.quality)
            errors.append(1.0 - scorer.score(result.reconstructed))
            size_sum += result.size_bytes
        return (
            math.fsum(errors) / self._ref_error_sum,
            size_sum / self._ref_size_sum,
        )

    def report(self, table: QuantTable) -> RatioReport:
        err, comp = self(table)
        return RatioReport(err, comp, len(self._planes))


def error_ratio(
    originals,
    candidate: QuantTable,
    reference: QuantTable,
    quality: int,
    metric: str = "fsim",
) -> float:
    """Aggregate perceptual error of `candidate` relative to `reference`."""
    ev = RatioEvaluator(originals, quality, metric, reference=reference)
    return ev(candidate)[0]


def compression_ratio(
    originals, candidate: QuantTable, reference: QuantTable, quality: int
) -> float:
    """Aggregate compressed size of `candidate` relative to `reference`."""
    originals = list(originals)
    if not originals:
        raise ValueError("need at least one image")
    cand_sum = 0
    ref_sum = 0
    for plane in originals:
        plane = np.asarray(plane)
        cand_sum += codec.compress(plane, candidate, quality).size_bytes
        ref_sum += codec.compress(plane, reference, quality).size_bytes
    return cand_sum / ref_sum
