"""Acceptance suite: one test per criterion, each printing a PASS line with
the measured numbers. Run with `pytest tests/test_acceptance.py -v -s`.

The annealing-trend criteria share one set of six 500-step runs (three
seeds, both modes) computed once per session; everything else is fast.
"""

import io
import time

import numpy as np
import pytest
from PIL import Image
from skimage.metrics import structural_similarity

from qtopt import codec
from qtopt.annealer import (
    MODE_ERROR,
    AnnealConfig,
    acceptance_probability,
    anneal_run,
    solution_score,
    write_history,
)
from qtopt.codec import jfif
from qtopt.codec.dct import forward_dct_block, inverse_dct_block
from qtopt.harness import DatasetPartition, orchestrate, timing_report
from qtopt.iqa import RatioEvaluator, fsim, msssim, ssim
from qtopt.qtable import QuantTable, scale_table, standard_table
from conftest import make_photo_plane, make_smooth_plane, make_textured_plane
from reference_impls import dct2_reference, fsim_reference, msssim_reference


def _report(number: int, name: str, detail: str) -> None:
    print(f"\nACCEPTANCE {number} {name}: PASS — {detail}")


@pytest.fixture(scope="module")
def trend_runs(textured_corpus):
    """Six 500-step runs at quality 75: three seeds in compression mode,
    the same three in error mode."""
    evaluator = RatioEvaluator(textured_corpus, quality=75, metric="fsim")
    runs = {}
    for seed in (101, 202, 303):
        runs[("compression", seed)] = anneal_run(
            AnnealConfig(max_steps=500, seed=seed, quality=75), evaluator
        )
        runs[("error", seed)] = anneal_run(
            AnnealConfig(max_steps=500, seed=seed, quality=75, mode=MODE_ERROR),
            evaluator,
        )
    return runs


def test_criterion_1_codec_interop(tmp_path):
    rng = np.random.default_rng(2024)
    started = time.perf_counter()
    images = []
    for i in range(50):
        if i == 0:
            h = w = 8
        elif i == 1:
            h = w = 512
        else:
            h = int(rng.integers(8, 513))
            w = int(rng.integers(8, 513))
            if i % 3 == 0:  # force non-multiple-of-8 shapes regularly
                h += int(h % 8 == 0)
                w += int(w % 8 == 0)
        if i % 2:
            images.append(rng.integers(0, 256, (h, w)).astype(np.uint8))
        else:
            images.append(make_smooth_plane(h, w, i))

    checked = 0
    for i, plane in enumerate(images):
        for j in range(10):
            table = QuantTable(rng.integers(1, 256, (8, 8)))
            path = tmp_path / "f.jfif"
            codec.emit_jfif(plane, table, path)
            raw = path.read_bytes()
            assert jfif.parse_dqt(raw) == table
            decoded = np.array(Image.open(io.BytesIO(raw)))
            recon = codec.reconstruct(plane, table)
            assert decoded.shape == recon.shape
            assert np.array_equal(decoded, recon), f"image {i} table {j}"
            checked += 1
    elapsed = time.perf_counter() - started
    assert checked == 500
    assert elapsed < 300.0
    _report(1, "codec interop", f"500/500 files sample-exact in {elapsed:.0f}s")


def test_criterion_2_quality_scaling():
    rng = np.random.default_rng(1)
    img = Image.fromarray(rng.integers(0, 256, (32, 32), dtype=np.uint8), "L")
    exact = 0
    for q in (1, 10, 25, 35, 50, 75, 95, 100):
        buf = io.BytesIO()
        img.save(buf, "JPEG", quality=q)
        buf.seek(0)
        emitted = list(Image.open(buf).quantization[0])
        ours = [int(v) for v in scale_table(standard_table(), q).flat()]
        assert emitted == ours, f"quality {q}"
        exact += 1
    _report(2, "quality scaling", f"{exact}/8 qualities bit-exact vs libjpeg DQT")


@pytest.fixture(scope="module")
def metric_corpus(photo_corpus, textured_corpus):
    """Fixed 10-pair corpus: originals against standard-table compressions."""
    pairs = []
    qualities = (95, 75, 50, 35)
    for i, plane in enumerate(photo_corpus):
        q = qualities[i % 4]
        pairs.append((plane, codec.compress(plane, standard_table(), q).reconstructed))
    for i, plane in enumerate(textured_corpus[:4]):
        q = qualities[i % 4]
        pairs.append((plane, codec.compress(plane, standard_table(), q).reconstructed))
    big = make_photo_plane("astronaut", 512)
    pairs.append((big, codec.compress(big, standard_table(), 75).reconstructed))
    return pairs


def test_criterion_3_metric_oracles(metric_corpus):
    assert len(metric_corpus) == 10
    worst = {"ssim": 0.0, "msssim": 0.0, "fsim": 0.0}
    for a, b in metric_corpus:
        s_ref = structural_similarity(
            a, b, gaussian_weights=True, sigma=1.5,
            use_sample_covariance=False, data_range=255,
        )
        worst["ssim"] = max(worst["ssim"], abs(ssim(a, b) - s_ref))
        worst["msssim"] = max(worst["msssim"], abs(msssim(a, b) - msssim_reference(a, b)))
        worst["fsim"] = max(worst["fsim"], abs(fsim(a, b) - fsim_reference(a, b)))
        assert ssim(a, b) == ssim(b, a)
        assert msssim(a, b) == msssim(b, a)
        assert fsim(a, b) == fsim(b, a)
    assert worst["ssim"] <= 1e-4
    assert worst["msssim"] <= 1e-3
    assert worst["fsim"] <= 1e-3
    a = metric_corpus[0][0]
    for fn in (ssim, msssim, fsim):
        assert abs(fn(a, a) - 1.0) <= 1e-9
    _report(
        3,
        "metric oracles",
        "max deviations ssim {ssim:.2e} msssim {msssim:.2e} fsim {fsim:.2e}; "
        "identity and symmetry exact".format(**worst),
    )


def test_criterion_4_acceptance_anchors():
    started = time.perf_counter()
    cfg = AnnealConfig()
    small = acceptance_probability(
        solution_score(0.99, 1.01, 20), 1.0, 2000, False, cfg
    )
    large = acceptance_probability(
        solution_score(0.90, 1.01, 20), 1.0, 2000, False, cfg
    )
    elapsed = time.perf_counter() - started
    assert 0.07 <= small <= 0.13
    assert 0.40 <= large <= 0.50
    assert elapsed < 1.0
    _report(
        4,
        "acceptance anchors",
        f"P(1% err drop)={small:.4f} in [0.07,0.13], "
        f"P(10% err drop)={large:.4f} in [0.40,0.50]",
    )


def test_criterion_5_dct_oracle():
    rng = np.random.default_rng(99)
    worst_fwd = 0.0
    worst_rt = 0.0
    for _ in range(1000):
        block = rng.uniform(-128, 127, (8, 8))
        coefs = forward_dct_block(block)
        worst_fwd = max(worst_fwd, np.abs(coefs - dct2_reference(block)).max())
        worst_rt = max(worst_rt, np.abs(inverse_dct_block(coefs) - block).max())
    assert worst_fwd <= 1e-9
    assert worst_rt <= 1e-6
    _report(
        5,
        "dct oracle",
        f"1000 blocks, fwd max err {worst_fwd:.2e} <= 1e-9, "
        f"round-trip {worst_rt:.2e} <= 1e-6",
    )


def test_criterion_6_desk_scale_trend(trend_runs):
    details = []
    for seed in (101, 202, 303):
        state, history = trend_runs[("compression", seed)]
        assert state.best.compression_ratio <= 0.97, f"seed {seed}"
        assert state.best.error_ratio <= 1.01 + 1e-12, f"seed {seed}"
        best_so_far = 1.0
        trace = []
        for rec in history:
            if rec.accepted and rec.compression_ratio < best_so_far:
                best_so_far = rec.compression_ratio
            trace.append(best_so_far)
        assert all(a >= b for a, b in zip(trace, trace[1:]))
        details.append(
            f"seed {seed}: best C={state.best.compression_ratio:.4f} "
            f"E={state.best.error_ratio:.4f}"
        )
    _report(6, "desk-scale trend", "; ".join(details))


def test_criterion_7_mode_asymmetry(trend_runs):
    wins = 0
    details = []
    for seed in (101, 202, 303):
        comp_final = trend_runs[("compression", seed)][0].compression_ratio
        err_final = trend_runs[("error", seed)][0].compression_ratio
        wins += comp_final < err_final
        details.append(f"seed {seed}: comp-mode C={comp_final:.4f} vs err-mode C={err_final:.4f}")
    assert wins >= 2
    _report(7, "mode asymmetry", f"{wins}/3 seeds; " + "; ".join(details))


def test_criterion_8_determinism(tmp_path, textured_corpus):
    small = [p[:64, :64] for p in textured_corpus[:4]]
    evaluator = RatioEvaluator(small[:2], quality=75, metric="fsim")
    cfg = AnnealConfig(max_steps=12, seed=55, quality=75)
    p1 = tmp_path / "a.jsonl"
    p2 = tmp_path / "b.jsonl"
    write_history(p1, cfg, anneal_run(cfg, evaluator)[1])
    write_history(p2, cfg, anneal_run(cfg, evaluator)[1])
    assert p1.read_bytes() == p2.read_bytes()

    part = DatasetPartition(
        training_groups=((small[0], small[1]), (small[2], small[3])),
        evaluation_set=(),
        seed=0,
    )
    serial = orchestrate(part, cfg, run_count=2, parallelism=1)
    parallel = orchestrate(part, cfg, run_count=2, parallelism=2)
    for a, b in zip(serial, parallel):
        assert a.history == b.history
    _report(
        8,
        "determinism",
        "byte-identical history files; parallelism 1 vs 2 produce equal runs",
    )


def test_criterion_9_guard_behavior():
    rng = np.random.default_rng(7)

    def jittery(table):
        drift = float(table.flat().mean() - standard_table().flat().mean())
        return (
            1.0 + drift * 0.0004 + rng.normal(0, 0.004),
            1.0 - drift * 0.002 + rng.normal(0, 0.004),
        )

    cfg = AnnealConfig(max_steps=10_000, seed=31)
    _, history = anneal_run(cfg, jittery)
    violations = 0
    certain = 0
    baseline_comp = 1.0
    for rec in history:
        if rec.accepted and rec.error_ratio - 1.0 > cfg.guard_threshold + 1e-15:
            violations += 1
        if not rec.guard_rejected and rec.compression_ratio < baseline_comp:
            certain += 1
            assert rec.acceptance_prob == 1.0
            assert rec.accepted
        if rec.accepted:
            baseline_comp = rec.compression_ratio
    assert violations == 0
    assert certain > 100
    _report(
        9,
        "guard behavior",
        f"10000 steps: 0 guard violations accepted; {certain} primary "
        "improvements all accepted with probability 1",
    )


def test_criterion_10_timing(trend_runs):
    corpus = [make_textured_plane(64, 64, 700 + i) for i in range(20)]
    trained = trend_runs[("compression", 101)][0].best.table
    report = timing_report(
        [("trained-q75", trained)], corpus, quality=75, repetitions=30
    )
    entry = report.entries[0]
    assert not entry.flagged
    _report(
        10,
        "timing non-regression",
        f"trained vs standard mean diff {entry.mean_diff_seconds * 1e3:+.2f} ms "
        f"(std {entry.stddev_seconds * 1e3:.2f} ms, 30 reps, 20 images): unflagged",
    )
