"""Multi-run experiment harness: dataset partitioning, parallel run
orchestration, history subsampling, held-out evaluation, final-table
selection, and encode-timing comparison.

The topology mirrors the training/evaluation split this kind of search
needs: a pool of images is shuffled once (seeded), an evaluation set is
held out, and the remainder is chunked into fixed-size training groups,
one annealing run per group. Evaluation always happens on the held-out
set, never on a run's own training images.
"""

from __future__ import annotations

import hashlib
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from . import codec
from .annealer import AnnealConfig, AnnealState, HistoryRecord, anneal_run, replay_baselines
from .iqa import RatioEvaluator
from .netpbm import load_image
from .qtable import QuantTable, standard_table

__all__ = [
    "DatasetPartition",
    "RunOutcome",
    "EvaluationRecord",
    "SelectionResult",
    "TimingEntry",
    "TimingReport",
    "partition",
    "derive_seed",
    "orchestrate",
    "rank_runs",
    "subsample_history",
    "evaluate_tables",
    "select_final",
    "timing_report",
]


@dataclass(frozen=True)
class DatasetPartition:
    """Disjoint training groups plus a held-out evaluation set."""

    training_groups: tuple[tuple, ...]
    evaluation_set: tuple
    seed: int

    def __post_init__(self):
        sizes = {len(g) for g in self.training_groups}
        if len(sizes) > 1:
            raise ValueError("training groups must share one size")


def partition(images: Sequence, group_size: int, eval_count: int, seed: int) -> DatasetPartition:
    """Shuffle deterministically, hold out `eval_count` images, and chunk
    the rest into groups of `group_size` (remainder discarded)."""
    if group_size < 1 or eval_count < 0:
        raise ValueError("group_size must be >= 1 and eval_count >= 0")
    items = list(images)
    if len(items) < eval_count + group_size:
        raise ValueError(
            f"{len(items)} images cannot supply {eval_count} evaluation images "
            f"plus one group of {group_size}"
        )
    order = np.random.default_rng(seed).permutation(len(items))
    shuffled = [items[i] for i in order]
    evaluation = tuple(shuffled[:eval_count])
    rest = shuffled[eval_count:]
    n_groups = len(rest) // group_size
    groups = tuple(
        tuple(rest[g * group_size : (g + 1) * group_size]) for g in range(n_groups)
    )
    return DatasetPartition(training_groups=groups, evaluation_set=evaluation, seed=seed)


def derive_seed(master_seed: int, run_index: int) -> int:
    """Stable per-run seed: SHA-256 of "master:index", first 8 bytes.
    Adding runs never reshuffles existing ones."""
    digest = hashlib.sha256(f"{master_seed}:{run_index}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


@dataclass
class RunOutcome:
    """Result of one orchestrated run; failed runs carry the error text."""

    run_index: int
    seed: int
    state: AnnealState | None = None
    history: list[HistoryRecord] | None = None
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None


def _as_plane(item) -> np.ndarray:
    if isinstance(item, np.ndarray):
        return item
    return load_image(item)


def _run_one(args) -> RunOutcome:
    run_index, cfg, group = args
    try:
        planes = [_as_plane(item) for item in group]
        evaluator = RatioEvaluator(planes, cfg.quality, cfg.metric)
        state, history = anneal_run(cfg, evaluator)
        return RunOutcome(run_index=run_index, seed=cfg.seed, state=state, history=history)
    except Exception as exc:  # noqa: BLE001 - skip-and-record fault contract
        return RunOutcome(run_index=run_index, seed=cfg.seed, error=f"{type(exc).__name__}: {exc}")


def orchestrate(
    dataset: DatasetPartition,
    cfg_template: AnnealConfig,
    run_count: int,
    parallelism: int = 1,
) -> list[RunOutcome]:
    """Launch `run_count` runs, run k training on group k with a seed
    derived from (template seed, k). Individual failures are recorded, not
    fatal. Output order and content are independent of parallelism."""
    if run_count < 1:
        raise ValueError("run_count must be >= 1")
    if run_count > len(dataset.training_groups):
        raise ValueError(
            f"run_count {run_count} exceeds {len(dataset.training_groups)} training groups"
        )
    jobs = [
        (
            k,
            replace(cfg_template, seed=derive_seed(cfg_template.seed, k)),
            dataset.training_groups[k],
        )
        for k in range(run_count)
    ]

    if parallelism <= 1:
        outcomes = [_run_one(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            outcomes = list(pool.map(_run_one, jobs))
    return sorted(outcomes, key=lambda o: o.run_index)


def rank_runs(outcomes: Sequence[RunOutcome]) -> list[RunOutcome]:
    """Completed runs ordered by best training compression (ties: that
    entry's error ratio, then run index). Failed runs are dropped."""
    ok = [o for o in outcomes if not o.failed]
    return sorted(
        ok,
        key=lambda o: (
            o.state.best.compression_ratio,
            o.state.best.error_ratio,
            o.run_index,
        ),
    )


def subsample_history(
    history: Sequence[HistoryRecord], count: int
) -> list[tuple[int, QuantTable]]:
    """Baseline tables at `count` evenly spaced steps, final step included.

    For an N-step history the sample points are ceil(j*N/count), deduplicated
    when count exceeds N.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    n = len(history)
    if n == 0:
        raise ValueError("history is empty")
    wanted = sorted({-(-j * n // count) for j in range(1, count + 1)})
    out = []
    it = iter(wanted)
    target = next(it)
    for step, baseline in replay_baselines(history):
        if step == target:
            out.append((step, baseline))
            target = next(it, None)
            if target is None:
                break
    return out


@dataclass(frozen=True)
class EvaluationRecord:
    """Held-out-set ratios for one table sampled from a run's history."""

    source_run: int
    source_step: int
    table: QuantTable
    eval_error_ratio: float
    eval_compression_ratio: float


def evaluate_tables(
    tables: Iterable[tuple[int, QuantTable]],
    evaluation_set: Sequence,
    quality: int,
    metric: str = "fsim",
    source_run: int = 0,
) -> list[EvaluationRecord]:
    """Error/compression ratios (vs the stock table) over the evaluation
    set for each (step, table) pair."""
    tables = list(tables)
    if not tables:
        raise ValueError("no tables to evaluate")
    planes = [_as_plane(item) for item in evaluation_set]
    evaluator = RatioEvaluator(planes, quality, metric)
    records = []
    for step, table in tables:
        try:
            err, comp = evaluator(table)
        except Exception as exc:
            raise RuntimeError(f"evaluation failed for table at step {step}") from exc
        records.append(
            EvaluationRecord(
                source_run=source_run,
                source_step=step,
                table=table,
                eval_error_ratio=err,
                eval_compression_ratio=comp,
            )
        )
    return records


@dataclass(frozen=True)
class SelectionResult:
    """Winner of the final-table rule, or the best-error fallback when no
    table clears the error bar."""

    qualified: bool
    record: EvaluationRecord


def select_final(
    records: Sequence[EvaluationRecord], min_error_improvement: float = 0.10
) -> SelectionResult:
    """Among records improving error by at least `min_error_improvement`,
    pick the smallest compression ratio (ties: lower error, earlier step)."""
    records = list(records)
    if not records:
        raise ValueError("no evaluation records")
    bar = 1.0 - min_error_improvement
    eligible = [r for r in records if r.eval_error_ratio <= bar]
    if not eligible:
        fallback = min(records, key=lambda r: (r.eval_error_ratio, r.source_step))
        return SelectionResult(qualified=False, record=fallback)
    winner = min(
        eligible,
        key=lambda r: (r.eval_compression_ratio, r.eval_error_ratio, r.source_step),
    )
    return SelectionResult(qualified=True, record=winner)


@dataclass(frozen=True)
class TimingEntry:
    label: str
    mean_seconds: float
    stddev_seconds: float
    mean_diff_seconds: float
    flagged: bool


@dataclass(frozen=True)
class TimingReport:
    reference: TimingEntry
    entries: tuple[TimingEntry, ...]
    repetitions: int


def _time_encode(planes, table: QuantTable, quality: int, repetitions: int) -> np.ndarray:
    # one untimed pass absorbs JIT compilation and cache warm-up
    for plane in planes:
        codec.compress(plane, table, quality)
    times = np.empty(repetitions)
    for r in range(repetitions):
        t0 = time.perf_counter()
        for plane in planes:
            codec.compress(plane, table, quality)
        times[r] = time.perf_counter() - t0
    return times


def timing_report(
    tables: dict[str, QuantTable] | Sequence[tuple[str, QuantTable]],
    evaluation_set: Sequence,
    quality: int,
    repetitions: int,
) -> TimingReport:
    """Wall-clock encode time per table vs the stock table.

    An entry is flagged when its mean differs from the reference mean by
    more than two pooled standard deviations.
    """
    if repetitions < 3:
        raise ValueError("repetitions must be >= 3")
    if isinstance(tables, dict):
        items = list(tables.items())
    else:
        items = list(tables)
    planes = [_as_plane(item) for item in evaluation_set]

    ref_times = _time_encode(planes, standard_table(), quality, repetitions)
    ref = TimingEntry(
        label="standard",
        mean_seconds=float(ref_times.mean()),
        stddev_seconds=float(ref_times.std(ddof=1)),
        mean_diff_seconds=0.0,
        flagged=False,
    )
    entries = []
    n = repetitions
    for label, table in items:
        times = _time_encode(planes, table, quality, repetitions)
        mean = float(times.mean())
        std = float(times.std(ddof=1))
        pooled = float(
            np.sqrt(((n - 1) * std**2 + (n - 1) * ref.stddev_seconds**2) / (2 * n - 2))
        )
        diff = mean - ref.mean_seconds
        entries.append(
            TimingEntry(
                label=label,
                mean_seconds=mean,
                stddev_seconds=std,
                mean_diff_seconds=diff,
                flagged=abs(diff) > 2 * pooled,
            )
        )
    return TimingReport(reference=ref, entries=tuple(entries), repetitions=repetitions)
