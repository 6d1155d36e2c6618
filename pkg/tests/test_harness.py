"""CLI front end: argument handling, output files, sweeps, exit codes."""

import argparse
import csv

import numpy as np
import pytest

from fct.errors import ConfigError
from fct.harness import (
    _load_config_file,
    _merge_options,
    main,
    parse_segments,
    run_sweep,
)

METRICS_HEADER = ("window_end,windowed_acc,overall_acc,forest_bytes,"
                  "repo_bytes,winner_source,winner_id")


def run_cli(*args):
    return main(list(args))


def small_run_args(out, **overrides):
    opts = {"segments": "2x400x2", "delay": "50", "window": "200",
            "bits-per-attr": "2", "seed": "3", "noise": "0.05"}
    opts.update(overrides)
    argv = ["run", "--out", str(out)]
    for k, v in opts.items():
        argv += [f"--{k}", v]
    return argv


def test_parse_segments():
    assert parse_segments("4x5000x25") == (4, 5000, 25)
    assert parse_segments("2X10X1") == (2, 10, 1)
    for bad in ("4x5000", "x", "axbxc", "0x10x1", "4x-1x2"):
        with pytest.raises(ConfigError):
            parse_segments(bad)


def test_run_writes_all_output_files(tmp_path, capsys):
    out = tmp_path / "r"
    assert run_cli(*small_run_args(out)) == 0
    for name in ("metrics.csv", "drifts.csv", "plotdata.csv", "summary.txt"):
        assert (out / name).exists()
    assert (out / "repository" / "index.csv").exists()
    assert "accuracy=" in capsys.readouterr().out

    lines = (out / "metrics.csv").read_text().splitlines()
    assert lines[0] == METRICS_HEADER
    assert len(lines) == 1 + 1600 // 200
    first = lines[1].split(",")
    assert first[0] == "200"
    assert 0.0 <= float(first[1]) <= 1.0
    assert first[5] in ("forest", "repository")

    summary = (out / "summary.txt").read_text()
    assert "total_instances=1600" in summary
    assert "scored_instances=1550" in summary
    assert "node_bytes=48" in summary
    assert "final_winner=" in summary


def test_drift_file_flags_are_binary(tmp_path):
    out = tmp_path / "r"
    assert run_cli(*small_run_args(out)) == 0
    with open(out / "drifts.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert all(r["true_boundary"] in ("0", "1") for r in rows)


def test_cbdt_run_exports_an_empty_repository(tmp_path):
    out = tmp_path / "r"
    assert run_cli(*small_run_args(out, mode="cbdt")) == 0
    index = (out / "repository" / "index.csv").read_text().splitlines()
    assert len(index) == 1  # header only


def test_same_seed_reproduces_metrics_byte_for_byte(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run_cli(*small_run_args(a)) == 0
    assert run_cli(*small_run_args(b)) == 0
    assert (a / "metrics.csv").read_bytes() == (b / "metrics.csv").read_bytes()


def test_file_dataset_round_trip(tmp_path):
    rng = np.random.default_rng(9)
    path = tmp_path / "data.csv"
    with open(path, "w") as fh:
        fh.write("a,b,class\n")
        for _ in range(300):
            x, y = rng.uniform(0, 1, size=2)
            fh.write(f"{x:.4f},{y:.4f},{'p' if x > 0.5 else 'q'}\n")
    out = tmp_path / "r"
    code = run_cli("run", "--dataset", "file", "--file", str(path),
                   "--delay", "20", "--window", "100", "--out", str(out))
    assert code == 0
    assert (out / "metrics.csv").exists()


def test_invalid_values_exit_2(tmp_path):
    out = str(tmp_path / "r")
    assert run_cli(*small_run_args(out, noise="1.5")) == 2
    assert run_cli(*small_run_args(out, segments="9x100x1")) == 2
    assert run_cli(*small_run_args(out, energy="0")) == 2
    assert run_cli("run", "--dataset", "file", "--out", out) == 2
    assert run_cli("run", "--dataset", "file", "--file",
                   str(tmp_path / "nope.csv"), "--out", out) == 2


def test_unknown_dataset_rejected_by_the_parser(tmp_path):
    with pytest.raises(SystemExit):
        run_cli("run", "--dataset", "bogus", "--out", str(tmp_path))


def test_config_file_merging(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "# smoke settings\n"
        "noise = 0.0\n"
        "segments = 2x300x2\n"
        "bits-per-attr = 2\n"
        "\n")
    ns = argparse.Namespace(config=str(cfg), noise=0.25)
    opts = _merge_options(ns)
    assert opts["segments"] == "2x300x2"   # from the file
    assert opts["bits_per_attr"] == 2      # dashed key normalized
    assert opts["noise"] == 0.25           # command line wins
    assert opts["mode"] == "fct"           # untouched default


def test_config_file_errors(tmp_path):
    bad_key = tmp_path / "a.cfg"
    bad_key.write_text("frobnicate = 1\n")
    with pytest.raises(ConfigError):
        _load_config_file(str(bad_key))
    bad_value = tmp_path / "b.cfg"
    bad_value.write_text("delay = soon\n")
    with pytest.raises(ConfigError):
        _load_config_file(str(bad_value))
    no_eq = tmp_path / "c.cfg"
    no_eq.write_text("delay\n")
    with pytest.raises(ConfigError):
        _load_config_file(str(no_eq))


def test_config_file_drives_a_run(tmp_path):
    out = tmp_path / "r"
    cfg = tmp_path / "run.cfg"
    cfg.write_text("segments = 2x300x1\ndelay = 30\nwindow = 150\n"
                   f"out = {out}\nbits-per-attr = 2\n")
    assert run_cli("run", "--config", str(cfg)) == 0
    assert (out / "metrics.csv").exists()


def test_sweep_writes_summary_and_per_value_runs(tmp_path):
    out = tmp_path / "sweep"
    code = run_cli("sweep", "--parameter", "energy", "--values", "0.4,0.95",
                   *small_run_args(out)[1:])
    assert code == 0
    with open(out / "sweep.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["energy"] for r in rows] == ["0.4", "0.95"]
    for r in rows:
        assert 0.0 <= float(r["overall_acc"]) <= 1.0
    assert (out / "energy=0.4" / "metrics.csv").exists()
    assert (out / "energy=0.95" / "metrics.csv").exists()


def test_sweep_rejects_unknown_parameter(tmp_path):
    with pytest.raises(ConfigError):
        run_sweep({"out": str(tmp_path)}, "threads", "1,2")
    with pytest.raises(ConfigError):
        run_sweep({"out": str(tmp_path)}, "energy", " , ")
    assert run_cli("sweep", "--parameter", "threads", "--values", "1",
                   *small_run_args(tmp_path / "s")[1:]) == 2


def test_sweep_value_parse_failure_exits_2(tmp_path):
    assert run_cli("sweep", "--parameter", "delay", "--values", "10,slow",
                   *small_run_args(tmp_path / "s")[1:]) == 2
