import csv
import json

import pytest

from pairzero import cli, fedsim
from pairzero.errors import SolverError


@pytest.fixture
def cfg_path(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"task": "quadratic", "T": 30, "d": 6, "K": 3}))
    return path


def read_sweep(path):
    lines = path.read_text().splitlines()
    assert lines[0] == "#schema=pairzero-sweep-v1"
    return list(csv.DictReader(lines[1:]))


def test_run_writes_outputs(cfg_path, tmp_path):
    out = tmp_path / "out"
    assert cli.main(["run", "--config", str(cfg_path), "--out", str(out)]) == 0
    assert (out / "trajectory.csv").exists()
    summary = json.loads((out / "summary.json").read_text())
    assert summary["accountant"]["passed"] and summary["seeds"]["model"] == 0


def test_rerun_is_byte_identical(cfg_path, tmp_path):
    for name in ("a", "b"):
        cli.main(["run", "--config", str(cfg_path), "--out", str(tmp_path / name)])
    assert (tmp_path / "a" / "trajectory.csv").read_bytes() == \
        (tmp_path / "b" / "trajectory.csv").read_bytes()


def test_solver_failure_names_solver(cfg_path, tmp_path, monkeypatch):
    def boom(config):
        raise SolverError("no zeta bracket", solver="solution", diagnostics={"zeta_hi": 1.0})
    monkeypatch.setattr(fedsim, "run", boom)
    out = tmp_path / "out"
    assert cli.main(["run", "--config", str(cfg_path), "--out", str(out)]) == cli.EXIT_ERROR
    err = json.loads((out / "error.json").read_text())
    assert err["error"] == "SolverError" and err["solver"] == "solution"
    assert err["diagnostics"]["zeta_hi"] == 1.0


def test_bad_config_names_field(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"delta": 1.5}))
    out = tmp_path / "out"
    assert cli.main(["run", "--config", str(path), "--out", str(out)]) == cli.EXIT_ERROR
    err = json.loads((out / "error.json").read_text())
    assert err["field"] == "delta" and "delta out of (0,1)" in err["message"]


def test_accountant_failure_exit(cfg_path, tmp_path, monkeypatch):
    real = fedsim.run

    def leaky(config):
        res = real(config)
        res.verdict = res.verdict.__class__(False, -1.0, res.r_dp + 1.0)
        return res
    monkeypatch.setattr(fedsim, "run", leaky)
    assert cli.main(["run", "--config", str(cfg_path), "--out", str(tmp_path / "o")]) == \
        cli.EXIT_ACCOUNTANT


def test_sweep_policy_rows(cfg_path, tmp_path):
    out = tmp_path / "sw"
    assert cli.main(["sweep", "--config", str(cfg_path), "--axis", "policy", "--values",
                     "solution,static,reversed", "--repeats", "2", "--out", str(out)]) == 0
    rows = read_sweep(out / "sweep.csv")
    assert [r["policy"] for r in rows] == ["solution", "static", "reversed"]
    assert all(r["status"] == "ok" and r["completed"] == "2" for r in rows)
    assert all(float(r["std_gap"]) > 0 for r in rows)


def test_sweep_single_repeat_has_zero_std(cfg_path, tmp_path):
    out = tmp_path / "sw"
    cli.main(["sweep", "--config", str(cfg_path), "--axis", "snr_max", "--values", "0,10",
              "--repeats", "1", "--out", str(out)])
    assert [float(r["std_gap"]) for r in read_sweep(out / "sweep.csv")] == [0.0, 0.0]


def test_sweep_failed_point_recorded(cfg_path, tmp_path, monkeypatch):
    monkeypatch.setenv("PAIRZERO_WORKERS", "2")
    out = tmp_path / "sw"
    assert cli.main(["sweep", "--config", str(cfg_path), "--axis", "mode", "--values",
                     "analog,warp,digital", "--repeats", "1", "--out", str(out)]) == 0
    rows = read_sweep(out / "sweep.csv")
    assert [r["status"] for r in rows] == ["ok", "failed", "ok"]
    assert "mode" in rows[1]["error"]


def test_repeat_seeds_are_distinct():
    base = {"model": 0, "channel": 1, "noise": 2, "data": 3}
    assert cli.repeat_seeds(base, 0) == base
    r1, r2 = cli.repeat_seeds(base, 1), cli.repeat_seeds(base, 2)
    assert len({r1["model"], r2["model"], 0}) == 3


def test_bad_worker_env(cfg_path, tmp_path, monkeypatch):
    monkeypatch.setenv("PAIRZERO_WORKERS", "many")
    assert cli.main(["sweep", "--config", str(cfg_path), "--axis", "eta", "--values", "0.01",
                     "--repeats", "1", "--out", str(tmp_path / "s")]) == cli.EXIT_ERROR


def test_verify_prints_table(capsys):
    assert cli.main(["verify", "--suite", "privacy"]) == 0
    out = capsys.readouterr().out
    assert "budget function" in out and "2/2 passed" in out


def test_usage_errors():
    with pytest.raises(SystemExit):
        cli.main(["verify", "--suite", "nope"])
