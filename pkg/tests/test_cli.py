import json
import subprocess
import sys
from pathlib import Path

import pytest

from dias.cli import main

ROOT = Path(__file__).resolve().parents[1]
SCN = ROOT / "scenarios"

TINY = """
[robots]
count = 2
positions = 1 1; 2 2
[sources]
random = 2
[run]
max_iterations = 30
"""


@pytest.fixture
def tiny(tmp_path):
    p = tmp_path / "tiny.cfg"
    p.write_text(TINY)
    return p


def test_run_twice_byte_identical(tiny, tmp_path, capsys):
    assert main(["run", str(tiny), "--seed", "7", "--out", str(tmp_path / "a")]) == 0
    assert main(["run", str(tiny), "--seed", "7", "--out", str(tmp_path / "b")]) == 0
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert "records.csv" in files and "summary.json" in files
    for name in files:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert "seed=7" in capsys.readouterr().out


def test_run_uses_env_out_root(tiny, tmp_path, monkeypatch):
    monkeypatch.setenv("DIAS_OUT_DIR", str(tmp_path / "root"))
    assert main(["run", str(tiny), "--seed", "1"]) == 0
    assert (tmp_path / "root" / "tiny_dias_seed1" / "records.csv").exists()


def test_sweep_and_report(tiny, tmp_path, capsys):
    d1, d2 = tmp_path / "dias", tmp_path / "greedy"
    assert main(["sweep", str(tiny), "--trials", "3", "--algo", "dias", "--out", str(d1)]) == 0
    assert main(["sweep", str(tiny), "--trials", "3", "--algo", "greedybo", "--out", str(d2)]) == 0
    assert sorted(p.name for p in d1.iterdir()) == ["aggregate.json", "trial_000", "trial_001", "trial_002"]
    agg = json.loads((d1 / "aggregate.json").read_text())
    assert agg["n_trials"] == 3 and agg["algorithm"] == "dias"
    seeds = [json.loads((d1 / f"trial_{k:03d}" / "summary.json").read_text())["summary"]["seed"] for k in range(3)]
    assert seeds == [0, 1, 2]

    capsys.readouterr()
    assert main(["report", str(d1), str(d2), "--out", str(tmp_path / "rep")]) == 0
    out = capsys.readouterr().out
    a1 = agg["mean_iterations"]
    a2 = json.loads((d2 / "aggregate.json").read_text())["mean_iterations"]
    row = {line.split()[0]: line for line in out.splitlines() if line.startswith(("dias", "greedybo"))}
    assert f"{a1:.1f}" in row["dias"] and f"{a2:.1f}" in row["greedybo"]
    lower = "dias" if a1 <= a2 else "greedybo"
    assert "*" in row[lower]
    if a1 != a2:
        assert "*" not in row["greedybo" if lower == "dias" else "dias"]
    curve = (tmp_path / "rep" / "wrmse_curve.csv").read_text().splitlines()
    assert curve[0] == "algorithm,n_sources,sweep,iter,mean_wrmse,std_wrmse,n_trials"
    assert len(curve) > 1


def test_report_detects_tampered_aggregate(tiny, tmp_path, capsys):
    d = tmp_path / "s"
    assert main(["sweep", str(tiny), "--trials", "2", "--out", str(d)]) == 0
    agg = json.loads((d / "aggregate.json").read_text())
    agg["mean_iterations"] += 1
    (d / "aggregate.json").write_text(json.dumps(agg))
    assert main(["report", str(d), "--out", str(tmp_path)]) == 1
    assert "disagrees" in capsys.readouterr().err


def test_invalid_config_nonzero(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("[robots]\ncount = -1\n")
    assert main(["run", str(bad)]) != 0
    assert "invalid config" in capsys.readouterr().err
    assert main(["run", str(tmp_path / "missing.cfg")]) != 0


def test_unknown_flag_prints_usage(capsys):
    with pytest.raises(SystemExit) as info:
        main(["run", "x.cfg", "--bogus"])
    assert info.value.code != 0
    assert "usage:" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [["--help"], ["run", "--help"], ["sweep", "--help"], ["report", "--help"]])
def test_help(argv, capsys):
    with pytest.raises(SystemExit) as info:
        main(argv)
    assert info.value.code == 0
    assert "usage:" in capsys.readouterr().out


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "dias", "run", str(SCN / "scenario3.cfg"), "--seed", "7",
                          "--out", str(tmp_path / "o")], capture_output=True, text=True, timeout=120)
    assert res.returncode == 0, res.stderr
    assert (tmp_path / "o" / "trajectory_robot2.csv").exists()
