import io
import json

import numpy as np
import pytest
from PIL import Image

from qtopt.cli import run
from qtopt.netpbm import save_pgm, save_ppm
from qtopt.qtable import parse_table, scale_table, serialize_table, standard_table
from conftest import make_textured_plane


@pytest.fixture()
def images_dir(tmp_path):
    d = tmp_path / "imgs"
    d.mkdir()
    for i in range(6):
        save_pgm(d / f"t{i}.pgm", make_textured_plane(64, 64, 300 + i))
    return d


def _read_table_output(capsys):
    out = capsys.readouterr().out
    return parse_table(out)


def test_scale_stdout_matches_library(capsys):
    assert run(["scale", "--table", "standard", "--quality", "95"]) == 0
    assert _read_table_output(capsys) == scale_table(standard_table(), 95)


def test_scale_header_mentions_settings(capsys):
    run(["scale", "--table", "standard", "--quality", "35"])
    out = capsys.readouterr().out
    assert out.startswith("# qtopt ")
    assert "quality=35" in out


def test_score_csv(tmp_path, capsys):
    a = make_textured_plane(64, 64, 1)
    b = make_textured_plane(64, 64, 2)
    save_pgm(tmp_path / "a.pgm", a)
    save_pgm(tmp_path / "b.pgm", b)
    rc = run(
        ["score", "--metric", "rmse", "--ref", str(tmp_path / "a.pgm"),
         "--test", str(tmp_path / "b.pgm")]
    )
    assert rc == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[-2] == "metric,value,flagged"
    name, value, flagged = lines[-1].split(",")
    assert name == "rmse"
    assert float(value) > 0


def test_encode_decodable(tmp_path, capsys):
    plane = make_textured_plane(48, 72, 3)
    save_pgm(tmp_path / "in.pgm", plane)
    out = tmp_path / "out.jfif"
    rc = run(
        ["encode", "--input", str(tmp_path / "in.pgm"), "--table", "standard",
         "--quality", "75", "--out", str(out)]
    )
    assert rc == 0
    decoded = np.array(Image.open(out))
    assert decoded.shape == plane.shape
    from qtopt import codec
    from qtopt.qtable import scale_table as st_

    assert np.array_equal(
        decoded, codec.reconstruct(plane, st_(standard_table(), 75))
    )


def test_encode_accepts_ppm(tmp_path, capsys):
    rgb = np.zeros((16, 16, 3), np.uint8)
    rgb[..., 0] = 200
    save_ppm(tmp_path / "c.ppm", rgb)
    out = tmp_path / "c.jfif"
    assert run(["encode", "--input", str(tmp_path / "c.ppm"), "--out", str(out)]) == 0
    assert out.exists()


def test_diff_csv(tmp_path, capsys):
    t = tmp_path / "t.txt"
    scaled = scale_table(standard_table(), 95)
    t.write_text(serialize_table(scaled))
    rc = run(["diff", "--table", str(t), "--reference", "standard"])
    assert rc == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert "row,col,delta,intensity" in lines
    first = [l for l in lines if l.startswith("0,0,")][0]
    assert first.split(",")[2] == str(scaled[0, 0] - 16)


def test_partition_manifest(images_dir, tmp_path):
    out = tmp_path / "m.json"
    rc = run(
        ["partition", str(images_dir), "--group-size", "2", "--eval-count", "2",
         "--seed", "5", "--out", str(out)]
    )
    assert rc == 0
    payload = json.loads(out.read_text())
    assert payload["tool"] == "qtopt"
    assert len(payload["evaluation_set"]) == 2
    assert len(payload["training_groups"]) == 2
    assert payload["seed"] == 5


def test_partition_requires_seed(images_dir, capsys):
    rc = run(["partition", str(images_dir), "--group-size", "2", "--eval-count", "2"])
    assert rc == 1
    assert "seed" in capsys.readouterr().err


def test_anneal_deterministic_files(images_dir, tmp_path, capsys):
    args = [
        "anneal", str(images_dir / "t0.pgm"), str(images_dir / "t1.pgm"),
        "--steps", "6", "--seed", "7", "--quality", "75",
    ]
    h1 = tmp_path / "h1.jsonl"
    h2 = tmp_path / "h2.jsonl"
    assert run(args + ["--out", str(h1)]) == 0
    assert run(args + ["--out", str(h2)]) == 0
    assert h1.read_bytes() == h2.read_bytes()
    header = json.loads(h1.read_text().splitlines()[0])
    assert header["record"] == "header"
    assert header["config"]["seed"] == 7
    assert header["version"]


def test_anneal_manifest_batch(images_dir, tmp_path, capsys):
    manifest = tmp_path / "m.json"
    run(
        ["partition", str(images_dir), "--group-size", "2", "--eval-count", "2",
         "--seed", "5", "--out", str(manifest)]
    )
    out_dir = tmp_path / "runs"
    rc = run(
        ["anneal", "--manifest", str(manifest), "--runs", "2", "--steps", "5",
         "--seed", "9", "--out", str(out_dir)]
    )
    assert rc == 0
    assert (out_dir / "run_000.jsonl").exists()
    assert (out_dir / "run_001.jsonl").exists()


def test_evaluate_then_select(images_dir, tmp_path, capsys):
    history = tmp_path / "h.jsonl"
    run(
        ["anneal", str(images_dir / "t0.pgm"), str(images_dir / "t1.pgm"),
         "--steps", "10", "--seed", "3", "--quality", "75", "--out", str(history)]
    )
    records = tmp_path / "records.csv"
    rc = run(
        ["evaluate", str(images_dir / "t4.pgm"), str(images_dir / "t5.pgm"),
         "--history", str(history), "--count", "4", "--out", str(records)]
    )
    assert rc == 0
    body = records.read_text().splitlines()
    assert body[0].startswith("# qtopt ")
    assert any(l.startswith("run,step") for l in body)
    data_lines = [l for l in body if l and not l.startswith("#") and not l.startswith("run,")]
    assert len(data_lines) == 4

    rc = run(["select", "--records", str(records), "--min-error-improvement", "0.10"])
    out = capsys.readouterr().out
    assert "eval_error" in out
    # a 10-step run will not hit a 10% error improvement; no-qualifier exit
    assert rc == 1
    assert "no table met the error bar" in out


def test_timing_csv(images_dir, tmp_path, capsys):
    table_file = tmp_path / "t.txt"
    table_file.write_text(serialize_table(standard_table()))
    rc = run(
        ["timing", str(images_dir / "t0.pgm"), str(images_dir / "t1.pgm"),
         "--tables", str(table_file), "--quality", "75", "--repetitions", "3"]
    )
    assert rc == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[2] == "table,mean_seconds,stddev_seconds,mean_diff_seconds,flagged"
    assert lines[3].startswith("standard,")


def test_config_file_layering(images_dir, tmp_path, capsys):
    cfg = tmp_path / "exp.ini"
    cfg.write_text("[scale]\nquality = 35\ntable = standard\n")
    assert run(["scale", "--config", str(cfg)]) == 0
    out1 = capsys.readouterr().out
    assert parse_table(out1) == scale_table(standard_table(), 35)
    # flag overrides config
    assert run(["scale", "--config", str(cfg), "--quality", "95"]) == 0
    out2 = capsys.readouterr().out
    assert parse_table(out2) == scale_table(standard_table(), 95)


def test_domain_error_exit_code(capsys):
    assert run(["scale", "--table", "standard", "--quality", "200"]) == 1
    assert "quality" in capsys.readouterr().err


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as exc:
        run(["no-such-command"])
    assert exc.value.code == 2


def test_missing_file_exit_code(capsys):
    rc = run(["score", "--metric", "ssim", "--ref", "/no/a.pgm", "--test", "/no/b.pgm"])
    assert rc == 1
