import json
import subprocess
import sys

import numpy as np
import pytest

from revanneal.cli import main
from revanneal.schedule import default_schedule_table, eval_A, eval_B, load_schedule_json


@pytest.fixture
def table_csv(tmp_path):
    rows = default_schedule_table()
    path = tmp_path / "sched.csv"
    lines = ["s,A_over_h_GHz,B_over_h_GHz"] + [f"{s:.17g},{a:.17g},{b:.17g}" for s, a, b in rows]
    path.write_text("\n".join(lines) + "\n")
    return path


def test_schedule_fit(tmp_path, table_csv, capsys):
    out = tmp_path / "coef.json"
    assert main(["schedule-fit", str(table_csv), "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert len(data) == 8 and "eta" in data
    assert (tmp_path / "coef.json.meta.json").exists()
    sched = load_schedule_json(out)
    rows = default_schedule_table()
    keep = rows[:, 1] > 1e-3
    np.testing.assert_allclose(eval_A(sched, rows[keep, 0]), rows[keep, 1], rtol=0.05)
    np.testing.assert_allclose(eval_B(sched, rows[:, 0]), rows[:, 2], rtol=0.01)
    assert "residual" in capsys.readouterr().out


def test_schedule_fit_bad_header(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("s,A_GHz,B_over_h_GHz\n0,1,0\n")
    assert main(["schedule-fit", str(bad)]) == 2
    assert "A_GHz" in capsys.readouterr().err


def write_config(tmp_path, **kw):
    cfg = {"mode": "WTS", "problem": "1S(0.1)", "backend": "bloch", "seed": 11}
    cfg.update(kw)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return path


def test_run_scan_deterministic(tmp_path):
    cfg = write_config(tmp_path)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["run-scan", "--config", str(cfg), "--out", str(a)]) == 0
    assert main(["run-scan", "--config", str(cfg), "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    assert len(lines) == 1 + 30 * 2  # 30 t_end values, two states each
    meta = json.loads((tmp_path / "a.csv.meta.json").read_text())
    assert meta["seed"] == 11 and meta["config"]["problem"] == "1S(0.1)"
    c = tmp_path / "c.csv"
    assert main(["run-scan", "--config", str(cfg), "--out", str(c), "--seed", "12"]) == 0
    assert c.read_bytes() != a.read_bytes()


def test_run_scan_workers_match_serial(tmp_path):
    cfg = write_config(tmp_path, t_grid=[2.0, 20.0, 200.0])
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["run-scan", "--config", str(cfg), "--out", str(a)]) == 0
    assert main(["run-scan", "--config", str(cfg), "--out", str(b), "--workers", "2"]) == 0
    assert a.read_bytes() == b.read_bytes()


@pytest.mark.parametrize("bad", [{"backend": "qmc"}, {"t_grid": [5.0, 1.0]}, {"mystery": 1}])
def test_run_scan_config_errors(tmp_path, bad, capsys):
    cfg = write_config(tmp_path, **bad)
    assert main(["run-scan", "--config", str(cfg)]) == 2
    assert capsys.readouterr().err


def test_run_scan_invalid_json(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text("{not json")
    assert main(["run-scan", "--config", str(path)]) == 2


def test_fit_saturating_on_scan(tmp_path):
    cfg = write_config(tmp_path)
    scan = tmp_path / "scan.csv"
    main(["run-scan", "--config", str(cfg), "--out", str(scan)])
    report = tmp_path / "fit.json"
    assert main(["fit", str(scan), "--kind", "saturating", "--out", str(report)]) == 0
    data = json.loads(report.read_text())
    assert {"f1", "f2", "f3", "residual"} <= set(data)
    assert data["f3"] > 0


def test_fit_beta_energy_pipeline(tmp_path, capsys):
    sweep = tmp_path / "chain.csv"
    assert main(["chain-sweep", "--beta", "7.64", "--out", str(sweep)]) == 0
    capsys.readouterr()
    assert main(["fit", str(sweep), "--kind", "beta_energy", "--column", "exact", "--json"]) == 0
    data = json.loads(capsys.readouterr().out.split("\n", 1)[1])
    assert data["beta"] == pytest.approx(7.64, abs=1e-4)
    assert data["temperature_mK"] == pytest.approx(26.96, abs=0.01)


def test_fit_empty_csv_and_numeric_failure(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    assert main(["fit", str(empty), "--kind", "saturating"]) == 2
    zeros = tmp_path / "zeros.csv"
    zeros.write_text("N,mean_energy\n10,0\n20,0\n")
    assert main(["fit", str(zeros), "--kind", "beta_energy", "--column", "exact"]) == 3


def test_equilibrium_tables(capsys):
    assert main(["equilibrium", "2S1", "--beta", "6.93", "--json"]) == 0
    data = json.loads(capsys.readouterr().out)
    probs = [row["probability"] for row in data["states"]]
    np.testing.assert_allclose(probs, [0.5, 0.25, 0.25, 0.0], atol=0.005)
    assert main(["equilibrium", "2S3", "--beta", "0", "--json"]) == 0
    data = json.loads(capsys.readouterr().out)
    np.testing.assert_allclose([r["probability"] for r in data["states"]], 0.25)
    assert main(["equilibrium", "chain(1000)", "--beta", "7.64", "--json"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert len(data["levels"]) == 1000 and "states" not in data
    assert main(["equilibrium", "2S1", "--beta", "6.93"]) == 0
    assert "uu" in capsys.readouterr().out


def test_equilibrium_errors():
    assert main(["equilibrium", "2S1", "--beta", "-1"]) == 2
    assert main(["equilibrium", "nonsense", "--beta", "1"]) == 2


def test_console_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "revanneal.cli", "equilibrium", "1S(0.1)",
                          "--beta", "6.93"], capture_output=True, text=True)
    assert out.returncode == 0 and "0.79995" in out.stdout
