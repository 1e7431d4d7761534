"""Command-line entry point.

Subcommands: encode, score, scale, diff, partition, anneal, evaluate,
select, timing. Settings resolve in three layers: built-in defaults, then
an optional INI-style config file (one section per subcommand), then
explicit flags. Whatever won is echoed in every text output's header so an
experiment directory documents itself.
"""

from __future__ import annotations

import argparse
import configparser
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, codec, harness, iqa
from .annealer import (
    MODE_COMPRESSION,
    MODE_ERROR,
    AnnealConfig,
    read_history,
    replay_baselines,
    write_history,
)
from .netpbm import load_image
from .qtable import (
    QuantTable,
    diff_heatmap,
    parse_table,
    scale_table,
    serialize_table,
    standard_table,
)

_IMAGE_SUFFIXES = (".pgm", ".ppm")


def _load_table(spec: str) -> QuantTable:
    if spec == "standard":
        return standard_table()
    return parse_table(Path(spec).read_text())


def _collect_images(paths) -> list[str]:
    out = []
    for p in paths:
        path = Path(p)
        if path.is_dir():
            found = sorted(
                str(f) for f in path.iterdir() if f.suffix.lower() in _IMAGE_SUFFIXES
            )
            if not found:
                raise ValueError(f"{path}: no .pgm/.ppm files")
            out.extend(found)
        else:
            out.append(str(path))
    if not out:
        raise ValueError("no input images given")
    return out


def _header_lines(command: str, settings: dict) -> list[str]:
    parts = " ".join(f"{k}={v}" for k, v in sorted(settings.items()))
    return [f"# qtopt {__version__} {command}", f"# {parts}"]


def _write_text(out_path, lines) -> None:
    text = "\n".join(lines) + "\n"
    if out_path:
        Path(out_path).write_text(text)
    else:
        sys.stdout.write(text)


class _Settings:
    """Layered option lookup: flags beat config file beats defaults."""

    def __init__(self, args: argparse.Namespace, command: str):
        self._args = vars(args)
        self._section = {}
        config_path = self._args.get("config")
        if config_path:
            parser = configparser.ConfigParser()
            with open(config_path) as fh:
                parser.read_file(fh)
            if parser.has_section(command):
                self._section = dict(parser.items(command))
        self.effective: dict = {}

    def get(self, key: str, default=None, kind=str):
        flag = self._args.get(key)
        if flag is not None:
            value = flag
        elif key in self._section:
            value = kind(self._section[key])
        else:
            value = default
        self.effective[key] = value
        return value


def _cmd_encode(args) -> int:
    s = _Settings(args, "encode")
    table_spec = s.get("table", "standard")
    quality = s.get("quality", 75, int)
    inputs = s.get("input")
    out = s.get("out")
    if inputs is None or out is None:
        raise ValueError("encode needs --input and --out")
    plane = load_image(inputs)
    table = scale_table(_load_table(table_spec), quality)
    written = codec.emit_jfif(plane, table, out)
    for line in _header_lines("encode", s.effective):
        print(line)
    print(f"# wrote {written} bytes to {out}")
    return 0


def _cmd_score(args) -> int:
    s = _Settings(args, "score")
    metric = s.get("metric", "fsim").lower()
    ref = s.get("ref")
    test = s.get("test")
    if ref is None or test is None:
        raise ValueError("score needs --ref and --test")
    a = load_image(ref)
    b = load_image(test)
    result = iqa.score(metric, a, b)
    lines = _header_lines("score", s.effective)
    lines.append("metric,value,flagged")
    lines.append(f"{result.metric_id},{result.value!r},{int(result.flagged)}")
    _write_text(s.get("out"), lines)
    return 0


def _cmd_scale(args) -> int:
    s = _Settings(args, "scale")
    table = _load_table(s.get("table", "standard"))
    quality = s.get("quality", 50, int)
    scaled = scale_table(table, quality)
    lines = _header_lines("scale", s.effective)
    lines.append(serialize_table(scaled).rstrip("\n"))
    _write_text(s.get("out"), lines)
    return 0


def _cmd_diff(args) -> int:
    s = _Settings(args, "diff")
    table_spec = s.get("table")
    if table_spec is None:
        raise ValueError("diff needs --table")
    candidate = _load_table(table_spec)
    reference = _load_table(s.get("reference", "standard"))
    hm = diff_heatmap(candidate, reference)
    lines = _header_lines("diff", s.effective)
    lines.append("row,col,delta,intensity")
    for r in range(8):
        for c in range(8):
            lines.append(f"{r},{c},{hm.deltas[r, c]},{hm.intensities[r, c]:.6f}")
    _write_text(s.get("out"), lines)
    return 0


def _cmd_partition(args) -> int:
    s = _Settings(args, "partition")
    seed = s.get("seed", None, int)
    if seed is None:
        raise ValueError("partition needs an explicit --seed")
    group_size = s.get("group_size", 10, int)
    eval_count = s.get("eval_count", 0, int)
    images = _collect_images(args.images)
    part = harness.partition(images, group_size, eval_count, seed)
    payload = {
        "tool": "qtopt",
        "version": __version__,
        "config": {k: v for k, v in s.effective.items() if k != "out"},
        "evaluation_set": list(part.evaluation_set),
        "training_groups": [list(g) for g in part.training_groups],
        "seed": part.seed,
    }
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    out = s.get("out")
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def _anneal_config(s: _Settings, seed: int) -> AnnealConfig:
    mode = s.get("mode", "compression")
    mode = {
        "compression": MODE_COMPRESSION,
        "error": MODE_ERROR,
        MODE_COMPRESSION: MODE_COMPRESSION,
        MODE_ERROR: MODE_ERROR,
    }.get(mode)
    if mode is None:
        raise ValueError("mode must be 'compression' or 'error'")
    return AnnealConfig(
        mode=mode,
        quality=s.get("quality", 75, int),
        metric=s.get("metric", "fsim").lower(),
        max_steps=s.get("steps", 1000, int),
        seed=seed,
        guard_threshold=s.get("guard_threshold", 0.01, float),
        score_exponent=s.get("score_exponent", 20.0, float),
        temperature_constant=s.get("temperature_constant", 200.0, float),
        cells_per_step=s.get("cells_per_step", 10, int),
        guard_anchor=s.get("guard_anchor", "absolute"),
        acceptance_formula=s.get("acceptance_formula", "reconstructed"),
    )


def _cmd_anneal(args) -> int:
    s = _Settings(args, "anneal")
    seed = s.get("seed", None, int)
    if seed is None:
        raise ValueError("anneal needs an explicit --seed")
    manifest = s.get("manifest")
    runs = s.get("runs", None, int)
    cfg = _anneal_config(s, seed)

    if manifest:
        payload = json.loads(Path(manifest).read_text())
        groups = [tuple(g) for g in payload["training_groups"]]
        part = harness.DatasetPartition(
            training_groups=tuple(groups),
            evaluation_set=tuple(payload["evaluation_set"]),
            seed=payload["seed"],
        )
        run_count = runs if runs is not None else len(groups)
        parallelism = s.get("parallelism", 1, int)
        out_dir = s.get("out", "runs")
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        outcomes = harness.orchestrate(part, cfg, run_count, parallelism)
        failures = 0
        for oc in outcomes:
            if oc.failed:
                failures += 1
                (out / f"run_{oc.run_index:03d}.failed").write_text(oc.error + "\n")
            else:
                run_cfg = dataclasses.replace(cfg, seed=oc.seed)
                write_history(out / f"run_{oc.run_index:03d}.jsonl", run_cfg, oc.history)
        print(f"# qtopt {__version__} anneal: {len(outcomes) - failures} ok, "
              f"{failures} failed, output in {out}")
        return 0

    images = _collect_images(args.images)
    planes = [load_image(p) for p in images]
    evaluator = iqa.RatioEvaluator(planes, cfg.quality, cfg.metric)
    from .annealer import anneal_run

    state, history = anneal_run(cfg, evaluator)
    out = s.get("out")
    if out is None:
        raise ValueError("anneal needs --out for the history file")
    write_history(out, cfg, history)
    print(f"# qtopt {__version__} anneal: {len(history)} steps -> {out}")
    print(
        f"# final error_ratio={state.error_ratio:.6f} "
        f"compression_ratio={state.compression_ratio:.6f}"
    )
    print(
        f"# best error_ratio={state.best.error_ratio:.6f} "
        f"compression_ratio={state.best.compression_ratio:.6f}"
    )
    return 0


def _cmd_evaluate(args) -> int:
    s = _Settings(args, "evaluate")
    history_path = s.get("history")
    count = s.get("count", 100, int)
    quality = s.get("quality", None, int)
    metric = s.get("metric", None)
    run_id = s.get("run_id", 0, int)
    if history_path is None:
        raise ValueError("evaluate needs --history")
    header, records = read_history(history_path)
    cfg = header.get("config", {})
    if quality is None:
        quality = int(cfg.get("quality", 75))
    if metric is None:
        metric = cfg.get("metric", "fsim")
    images = _collect_images(args.images)
    sampled = harness.subsample_history(records, count)
    eval_records = harness.evaluate_tables(
        sampled, images, quality, metric, source_run=run_id
    )
    train = {step: (rec.error_ratio, rec.compression_ratio)
             for step, rec in _baseline_ratio_map(records).items()}
    out = s.get("out")
    if out and str(out).endswith(".json"):
        payload = {
            "tool": "qtopt",
            "version": __version__,
            "config": {k: v for k, v in s.effective.items() if k != "out"},
            "records": [
                {
                    "run": er.source_run,
                    "step": er.source_step,
                    "train_error": train[er.source_step][0],
                    "train_compression": train[er.source_step][1],
                    "eval_error": er.eval_error_ratio,
                    "eval_compression": er.eval_compression_ratio,
                    "table": [int(v) for v in er.table.flat()],
                }
                for er in eval_records
            ],
        }
        Path(out).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        return 0
    lines = _header_lines("evaluate", s.effective)
    lines.append("run,step,train_error,train_compression,eval_error,eval_compression,table")
    for er in eval_records:
        tr_e, tr_c = train[er.source_step]
        flat = " ".join(str(v) for v in er.table.flat())
        lines.append(
            f"{er.source_run},{er.source_step},{tr_e!r},{tr_c!r},"
            f"{er.eval_error_ratio!r},{er.eval_compression_ratio!r},{flat}"
        )
    _write_text(out, lines)
    return 0


class _BaselineTrack:
    __slots__ = ("error_ratio", "compression_ratio")

    def __init__(self):
        self.error_ratio = 1.0
        self.compression_ratio = 1.0


def _baseline_ratio_map(records):
    """Step -> accepted-baseline record (training ratios) after that step."""
    out = {}
    current = _BaselineTrack()
    for rec in records:
        if rec.accepted:
            current = rec
        out[rec.step] = current
    return out


def _parse_records_csv(path) -> list[harness.EvaluationRecord]:
    records = []
    for line in Path(path).read_text().splitlines():
        if not line or line.startswith("#") or line.startswith("run,"):
            continue
        run, step, _tr_e, _tr_c, ev_e, ev_c, flat = line.split(",")
        table = QuantTable(np.array([int(v) for v in flat.split()]).reshape(8, 8))
        records.append(
            harness.EvaluationRecord(
                source_run=int(run),
                source_step=int(step),
                table=table,
                eval_error_ratio=float(ev_e),
                eval_compression_ratio=float(ev_c),
            )
        )
    if not records:
        raise ValueError(f"{path}: no evaluation records")
    return records


def _cmd_select(args) -> int:
    s = _Settings(args, "select")
    records_path = s.get("records")
    min_improvement = s.get("min_error_improvement", 0.10, float)
    if records_path is None:
        raise ValueError("select needs --records")
    records = _parse_records_csv(records_path)
    result = harness.select_final(records, min_improvement)
    rec = result.record
    lines = _header_lines("select", s.effective)
    if result.qualified:
        lines.append(f"# selected run {rec.source_run} step {rec.source_step}")
    else:
        lines.append("# no table met the error bar; best-error record follows")
    lines.append(
        f"# eval_error={rec.eval_error_ratio:.6f} "
        f"eval_compression={rec.eval_compression_ratio:.6f}"
    )
    lines.append(serialize_table(rec.table).rstrip("\n"))
    _write_text(s.get("out"), lines)
    return 0 if result.qualified else 1


def _cmd_timing(args) -> int:
    s = _Settings(args, "timing")
    quality = s.get("quality", 75, int)
    repetitions = s.get("repetitions", 30, int)
    images = _collect_images(args.images)
    tables = [(t, _load_table(t)) for t in args.tables]
    report = harness.timing_report(tables, images, quality, repetitions)
    lines = _header_lines("timing", s.effective)
    lines.append("table,mean_seconds,stddev_seconds,mean_diff_seconds,flagged")
    ref = report.reference
    lines.append(f"standard,{ref.mean_seconds!r},{ref.stddev_seconds!r},0.0,0")
    for e in report.entries:
        lines.append(
            f"{e.label},{e.mean_seconds!r},{e.stddev_seconds!r},"
            f"{e.mean_diff_seconds!r},{int(e.flagged)}"
        )
    _write_text(s.get("out"), lines)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qtopt",
        description="JPEG quantization-table search: codec, metrics, annealing.",
    )
    parser.add_argument("--version", action="version", version=f"qtopt {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="INI config file with per-subcommand sections")
        p.add_argument("--out", help="output path (default: stdout)")

    p = sub.add_parser("encode", help="encode a PGM/PPM to baseline JFIF")
    common(p)
    p.add_argument("--input", help="input image (PGM/PPM)")
    p.add_argument("--table", help="'standard' or a table file", default=None)
    p.add_argument("--quality", type=int)

    p = sub.add_parser("score", help="print metric value for an image pair")
    common(p)
    p.add_argument("--metric", choices=sorted(iqa.METRICS))
    p.add_argument("--ref", help="reference image")
    p.add_argument("--test", help="distorted image")

    p = sub.add_parser("scale", help="quality-scale a table")
    common(p)
    p.add_argument("--table")
    p.add_argument("--quality", type=int)

    p = sub.add_parser("diff", help="cell-wise table diff as heat-map CSV")
    common(p)
    p.add_argument("--table", help="candidate table file")
    p.add_argument("--reference", help="'standard' or a table file", default=None)

    p = sub.add_parser("partition", help="split images into training groups + eval set")
    common(p)
    p.add_argument("images", nargs="*", help="image files or directories")
    p.add_argument("--group-size", dest="group_size", type=int)
    p.add_argument("--eval-count", dest="eval_count", type=int)
    p.add_argument("--seed", type=int)

    p = sub.add_parser("anneal", help="run annealing (single run or a manifest batch)")
    common(p)
    p.add_argument("images", nargs="*", help="training images (single-run form)")
    p.add_argument("--manifest", help="partition manifest (batch form)")
    p.add_argument("--runs", type=int, help="number of manifest groups to run")
    p.add_argument("--parallelism", type=int)
    p.add_argument("--mode", help="'compression' or 'error'")
    p.add_argument("--metric", choices=("fsim", "msssim"))
    p.add_argument("--quality", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--guard-threshold", dest="guard_threshold", type=float)
    p.add_argument("--guard-anchor", dest="guard_anchor", choices=("absolute", "baseline"))
    p.add_argument(
        "--acceptance-formula",
        dest="acceptance_formula",
        choices=("reconstructed", "printed"),
    )
    p.add_argument("--score-exponent", dest="score_exponent", type=float)
    p.add_argument("--temperature-constant", dest="temperature_constant", type=float)
    p.add_argument("--cells-per-step", dest="cells_per_step", type=int)

    p = sub.add_parser("evaluate", help="subsample a history and score on held-out images")
    common(p)
    p.add_argument("images", nargs="*", help="evaluation images or directories")
    p.add_argument("--history", help="history JSON-lines file")
    p.add_argument("--count", type=int, help="tables to subsample")
    p.add_argument("--quality", type=int)
    p.add_argument("--metric", choices=("fsim", "msssim"))
    p.add_argument("--run-id", dest="run_id", type=int)

    p = sub.add_parser("select", help="pick the final table from evaluation records")
    common(p)
    p.add_argument("--records", help="CSV from the evaluate subcommand")
    p.add_argument(
        "--min-error-improvement", dest="min_error_improvement", type=float
    )

    p = sub.add_parser("timing", help="encode-time comparison vs the standard table")
    common(p)
    p.add_argument("images", nargs="*", help="image files or directories")
    p.add_argument("--tables", nargs="+", required=True, help="table files to time")
    p.add_argument("--quality", type=int)
    p.add_argument("--repetitions", type=int)

    return parser


_COMMANDS = {
    "encode": _cmd_encode,
    "score": _cmd_score,
    "scale": _cmd_scale,
    "diff": _cmd_diff,
    "partition": _cmd_partition,
    "anneal": _cmd_anneal,
    "evaluate": _cmd_evaluate,
    "select": _cmd_select,
    "timing": _cmd_timing,
}


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"qtopt {args.command}: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
