from __future__ import annotations

import json
import subprocess
import sys

import pytest

from prosvio.cli import main


def test_sim_run_eval_golden_path(tmp_path, capsys):
    ds, out = tmp_path / "ds", tmp_path / "out"
    assert main(["sim", "--terrain", "stairs", "--steps", "3", "--out", str(ds)]) == 0
    assert (ds / "manifest.json").is_file() and (ds / "truth.csv").is_file()
    assert main(["run", str(ds), "--out", str(out)]) == 0
    for name in ("trajectory.csv", "map.csv", "metrics.json"):
        assert (out / name).is_file()
    capsys.readouterr()
    assert main(["eval", str(out / "trajectory.csv"), str(ds), "--part", "toe",
                 "--out", str(tmp_path / "ate.json")]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["part"] == "toe" and report["rmse_x"] < 0.05 and report["rmse_z"] < 0.05
    assert json.loads((tmp_path / "ate.json").read_text()) == report
    assert main(["eval", str(out / "trajectory.csv"), str(ds / "truth.csv"), "--window", "0", "1"]) == 0
    assert json.loads(capsys.readouterr().out)["n_samples"] == 31


def test_obstacle_eval_uses_visibility_window(tmp_path, capsys):
    ds, out = tmp_path / "ds", tmp_path / "out"
    main(["sim", "--terrain", "obstacle", "--strides", "3", "--out", str(ds)])
    main(["run", str(ds), "--out", str(out), "--no-visual"])
    capsys.readouterr()
    main(["eval", str(out / "trajectory.csv"), str(ds)])
    report = json.loads(capsys.readouterr().out)
    assert report["window"] is not None
    assert json.loads((out / "metrics.json").read_text())["n_visual_updates"] == 0


def test_run_without_dataset_is_a_usage_error(capsys):
    with pytest.raises(SystemExit) as info:
        main(["run", "--out", "x"])
    assert info.value.code == 2
    assert "usage" in capsys.readouterr().err


def test_module_errors_exit_nonzero(tmp_path, capsys):
    assert main(["run", str(tmp_path / "missing"), "--out", str(tmp_path / "o")]) == 1
    assert "error" in capsys.readouterr().err
    bad = tmp_path / "cfg.json"
    bad.write_text('{"features": {"d": -1}}')
    main(["sim", "--steps", "2", "--strides", "1", "--out", str(tmp_path / "ds")])
    assert main(["run", str(tmp_path / "ds"), "--out", str(tmp_path / "o"), "--config", str(bad)]) == 1


def test_bench_reports_each_stage(capsys):
    assert main(["bench", "--frames", "100", "--points", "500", "--json"]) == 0
    stats = json.loads(capsys.readouterr().out)
    assert {"preprocess", "features", "icp", "visual"} <= set(stats)
    for s in stats.values():
        assert set(s) == {"mean", "median", "max", "n"} and s["n"] == 100
    assert main(["bench", "--frames", "5", "--points", "500"]) == 0
    table = capsys.readouterr().out
    assert "median ms" in table and "visual" in table


def test_trials_aggregates(tmp_path, capsys):
    out = tmp_path / "trials.json"
    assert main(["trials", "-n", "2", "--steps", "3", "--out", str(out)]) == 0
    summary = json.loads(out.read_text())
    assert summary["toe"]["n_trials"] == 2 and len(summary["trials"]) == 2


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "prosvio.cli", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "bench" in proc.stdout
