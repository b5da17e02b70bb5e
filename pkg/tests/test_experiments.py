"""Sweep orchestration, result files, policy report, and CLI exit codes."""
import hashlib
import json
import math
import subprocess
import sys

import pytest

from aoisim import experiments
from aoisim.cli import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, main
from aoisim.config import SweepVariable, parse_config
from aoisim.experiments import (SWEEP_HEADER, emit_policy_report, point_config,
                                run_sweep, sweep_points)

FAST_BASE = (
    "side = 400\n"
    "density = 1e-4\n"
    "horizon = 300\n"
    "realizations = 2\n"
    "seed = 2\n"
)

SWEEP_TEXT = FAST_BASE + (
    "sweep = arrival_rate\n"
    "values = 0.1 0.2\n"
    "policies = empty, disk:100\n"
)


def test_point_config_replacements():
    spec = parse_config(SWEEP_TEXT)
    cfg = point_config(spec, 0.1, spec.policies[1])
    assert cfg.arrival_rate == 0.1
    assert cfg.stopping.label() == "disk:100"
    assert cfg.density == spec.base.density

    dens = parse_config(FAST_BASE + "sweep = density\nvalues = 2e-4\n")
    cfg2 = point_config(dens, 2e-4, dens.policies[0])
    assert cfg2.density == 2e-4
    assert cfg2.arrival_rate == dens.base.arrival_rate

    radii = parse_config(FAST_BASE + "sweep = observation_radius\nvalues = 60\n")
    cfg3 = point_config(radii, 60.0, None)
    assert cfg3.stopping.label() == "disk:60"


def test_sweep_points_order():
    spec = parse_config(SWEEP_TEXT)
    pts = list(sweep_points(spec))
    assert [(v, label) for v, label, _ in pts] == [
        (0.1, "empty"), (0.1, "disk:100"), (0.2, "empty"), (0.2, "disk:100")]

    radii = parse_config(FAST_BASE + "sweep = observation_radius\nvalues = 60 120\n")
    labels = [label for _, label, _ in sweep_points(radii)]
    assert labels == ["disk:60", "disk:120"]


def test_run_sweep_outputs(tmp_path):
    spec = parse_config(SWEEP_TEXT)
    out = tmp_path / "results"
    rows = run_sweep(spec, out, config_text=SWEEP_TEXT)
    assert len(rows) == 4

    lines = (out / "sweep.csv").read_text().strip().split("\n")
    assert lines[0] == SWEEP_HEADER
    assert SWEEP_HEADER == ("sweep_value,policy,network_peak_aoi,"
                            "ci_low,ci_high,fraction_stable")
    assert len(lines) == 5
    for line, row in zip(lines[1:], rows):
        fields = line.split(",")
        assert float(fields[0]) == row["sweep_value"]
        assert fields[1] == row["policy"]
        assert float(fields[2]) == pytest.approx(row["network_peak_aoi"])
        assert 0.0 <= float(fields[5]) <= 1.0

    for value in ("0.1", "0.2"):
        for label in ("empty", "disk-100"):
            links = out / f"links_arrival_rate_{value}_{label}.csv"
            summary = out / f"summary_arrival_rate_{value}_{label}.json"
            assert links.exists() and summary.exists()
            payload = json.loads(summary.read_text())
            assert "network_peak_aoi" in payload
            assert "network_peak_aoi_all" in payload
            assert payload["arrival_rate"] == float(value)
            head = links.read_text().split("\n", 1)[0]
            assert head == "realization,link_index,tx_x,tx_y,gamma,deliveries,peak_aoi,stable"

    prov = json.loads((out / "provenance.json").read_text())
    assert prov["seed"] == 2
    assert prov["sweep"] == "arrival_rate"
    assert prov["values"] == [0.1, 0.2]
    assert prov["policies"] == ["empty", "disk:100"]
    assert prov["rows"] == 4
    assert prov["config_sha256"] == hashlib.sha256(SWEEP_TEXT.encode()).hexdigest()
    assert prov["runtime_seconds"] >= 0.0


def test_run_sweep_flushes_completed_rows(tmp_path, monkeypatch):
    # A crash mid-sweep must leave the rows that already finished on disk.
    spec = parse_config(SWEEP_TEXT)
    calls = {"n": 0}
    real_run = experiments.run_experiment

    def flaky(cfg, threads=1):
        calls["n"] += 1
        if calls["n"] == 3:
            raise RuntimeError("boom")
        return real_run(cfg, threads=threads)

    monkeypatch.setattr(experiments, "run_experiment", flaky)
    out = tmp_path / "partial"
    with pytest.raises(RuntimeError, match="boom"):
        run_sweep(spec, out, config_text=SWEEP_TEXT)
    lines = (out / "sweep.csv").read_text().strip().split("\n")
    assert lines[0] == SWEEP_HEADER
    assert len(lines) == 3
    assert not (out / "provenance.json").exists()


def test_policy_report_empty_observation(tmp_path):
    spec = parse_config(FAST_BASE + "sweep = arrival_rate\nvalues = 0.2\npolicies = empty\n")
    path = tmp_path / "report.csv"
    rows = emit_policy_report(spec, path)
    assert rows, "expected at least one node"
    for row in rows:
        assert row["in_set_count"] == 0
        assert row["tail_mass"] == 0.0
        assert row["condition_mass"] == 0.0
        assert row["opportunistic"] is False
        assert row["gamma"] == 1.0
    lines = path.read_text().strip().split("\n")
    assert lines[0] == "node,in_set_count,tail_mass,condition_mass,opportunistic,gamma"
    assert len(lines) == len(rows) + 1


def test_policy_report_dense_disk_throttles(tmp_path):
    text = ("side = 400\ndensity = 1e-3\nhorizon = 100\nrealizations = 1\nseed = 4\n"
            "sweep = arrival_rate\nvalues = 0.2\npolicies = disk:100\n")
    spec = parse_config(text)
    path = tmp_path / "report.csv"
    rows = emit_policy_report(spec, path)
    assert any(r["opportunistic"] and r["gamma"] < 1.0 for r in rows)
    for r in rows:
        assert 0.0 < r["gamma"] <= 1.0
        assert r["condition_mass"] >= r["tail_mass"]
        assert (r["gamma"] < 1.0) == r["opportunistic"]


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------

FAST_CLI = (
    "side = 300\ndensity = 1e-4\nhorizon = 200\nrealizations = 1\nseed = 2\n"
    "sweep = arrival_rate\nvalues = 0.1\npolicies = empty\n"
)


def write_config(tmp_path, text=FAST_CLI):
    path = tmp_path / "experiment.cfg"
    path.write_text(text)
    return path


def test_cli_run_success(tmp_path, capsys):
    cfg = write_config(tmp_path)
    out = tmp_path / "out"
    assert main(["run", str(cfg), "--output", str(out)]) == EXIT_OK
    assert (out / "sweep.csv").exists()
    assert (out / "provenance.json").exists()
    assert "1 sweep rows" in capsys.readouterr().out


def test_cli_seed_and_mode_overrides(tmp_path):
    cfg = write_config(tmp_path)
    out = tmp_path / "out"
    assert main(["run", str(cfg), "--output", str(out),
                 "--seed", "99", "--mode", "dominant"]) == EXIT_OK
    prov = json.loads((out / "provenance.json").read_text())
    assert prov["seed"] == 99
    summary = json.loads((out / "summary_arrival_rate_0.1_empty.json").read_text())
    assert summary["mode"] == "dominant"
    assert summary["master_seed"] == 99


def test_cli_missing_config_exits_2(tmp_path, capsys):
    assert main(["run", str(tmp_path / "nope.cfg")]) == EXIT_CONFIG
    assert "cannot read config" in capsys.readouterr().err


def test_cli_bad_config_exits_2(tmp_path, capsys):
    cfg = write_config(tmp_path, "sweep = arrival_rate\nvalues = 0.1\nbogus = 1\n")
    assert main(["run", str(cfg)]) == EXIT_CONFIG
    assert "line 3" in capsys.readouterr().err


def test_cli_bad_threads_exits_2(tmp_path):
    cfg = write_config(tmp_path)
    assert main(["run", str(cfg), "--threads", "0"]) == EXIT_CONFIG


def test_cli_runtime_failure_exits_3(tmp_path, capsys):
    cfg = write_config(tmp_path)
    blocker = tmp_path / "blocked"
    blocker.write_text("not a directory")
    assert main(["run", str(cfg), "--output", str(blocker)]) == EXIT_RUNTIME
    assert "error" in capsys.readouterr().err


def test_cli_report(tmp_path, capsys):
    cfg = write_config(tmp_path)
    out = tmp_path / "report.csv"
    assert main(["report", str(cfg), "--output", str(out)]) == EXIT_OK
    assert out.exists()
    assert "policy report" in capsys.readouterr().out


def test_console_script_entry_point(tmp_path):
    cfg = write_config(tmp_path)
    out = tmp_path / "out"
    proc = subprocess.run([sys.executable, "-m", "aoisim.cli", "run", str(cfg),
                           "--output", str(out)],
                          capture_output=True, text=True)
    assert proc.returncode == EXIT_OK, proc.stderr
    assert (out / "sweep.csv").exists()
