import json
import subprocess
import sys
import xml.etree.ElementTree as ET

import pytest

from cornerlab import cli
from cornerlab.bohr import Check
from cornerlab.constructions import behrend_corner_free


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr().out.strip()
    return code, (json.loads(out) if out else None), out


def test_corners_max_3(capsys):
    code, rec, _ = run(capsys, "corners", "max", "--n", "3")
    assert code == 0
    assert rec["outputs"]["size"] == 7 and rec["outputs"]["L"] == "7/9"
    assert len(rec["outputs"]["witness"]) == 7
    assert set(rec) == {"command", "inputs", "outputs", "checks", "seed", "version"}
    assert all(set(c) == {"ref", "lhs", "rhs", "ok"} for c in rec["checks"])


def test_corners_count_full(capsys):
    code, rec, _ = run(capsys, "corners", "count", "--n", "3", "--full")
    assert code == 0 and rec["outputs"]["count"] == 5
    code, rec, _ = run(capsys, "corners", "count", "--n", "3", "--full", "--mode", "nzd")
    assert code == 0 and rec["outputs"]["count"] == 10


def test_records_byte_identical(capsys):
    a = run(capsys, "corners", "max", "--n", "4")[2]
    b = run(capsys, "corners", "max", "--n", "4")[2]
    assert a == b


def test_behrend_pipe_into_free():
    p1 = subprocess.run([sys.executable, "-m", "cornerlab.cli", "construct", "behrend", "--n", "9"],
                        capture_output=True, text=True, check=True)
    p2 = subprocess.run([sys.executable, "-m", "cornerlab.cli", "corners", "free", "--stdin"],
                        input=p1.stdout, capture_output=True, text=True)
    assert p2.returncode == 0
    assert json.loads(p2.stdout)["outputs"]["corner_free"] is True


def test_free_detects_corner(tmp_path, capsys):
    f = tmp_path / "a.txt"
    f.write_text("1 1\n2 1\n1 2\n")
    code, rec, _ = run(capsys, "corners", "free", "--set", str(f))
    assert code == 0 and rec["outputs"]["corner_free"] is False
    assert rec["outputs"]["witness"] == [1, 1, 1]


def test_seed_required(capsys):
    assert cli.main(["construct", "random", "--n", "10", "--delta", "0.3"]) == 4


def test_unknown_flag_and_missing_input(capsys):
    assert cli.main(["corners", "max", "--n", "3", "--nope"]) == 4
    assert cli.main(["corners", "free"]) == 4
    assert cli.main(["corners", "max"]) == 4


def test_config_precedence_and_unknown_keys(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("# comment\nn = 3\nmode = posd\n")
    code, rec, _ = run(capsys, "corners", "max", "--config", str(cfg))
    assert code == 0 and rec["outputs"]["size"] == 7
    code, rec, _ = run(capsys, "corners", "max", "--config", str(cfg), "--n", "2")
    assert code == 0 and rec["outputs"]["size"] == 3
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = blue\n")
    assert cli.main(["corners", "max", "--config", str(bad)]) == 4
    badc = tmp_path / "badc.cfg"
    badc.write_text("const.nonsense = 1\n")
    assert cli.main(["corners", "max", "--config", str(badc)]) == 4


def test_constant_overrides(capsys):
    assert cli.main(["corners", "max", "--n", "2", "--const", "gain=0.05"]) == 0
    capsys.readouterr()
    assert cli.main(["corners", "max", "--n", "2", "--const", "bogus=1"]) == 4
    assert cli.main(["corners", "max", "--n", "2", "--profile", "paper", "--const", "gain=0.05"]) == 4


def test_budget_exit(capsys):
    code, rec, _ = run(capsys, "corners", "max", "--n", "7", "--budget", "50")
    assert code == 3
    assert rec["outputs"]["error"] == "BudgetExceeded" and rec["outputs"]["best"]["exact"] is False


def test_paper_profile_infeasible(tmp_path, capsys):
    f = tmp_path / "a.txt"
    f.write_text("1 1\n")
    code, rec, _ = run(capsys, "increment", "drive", "--set", str(f), "--n", "8", "--profile", "paper")
    assert code == 4 and rec["outputs"]["error"] == "InfeasibleProfile"


def test_violation_exit(monkeypatch, capsys):
    monkeypatch.setattr(cli, "_corners", lambda *a: ({}, [Check("demo.bound", 2.0, 1.0, False)], {}))
    code, rec, _ = run(capsys, "corners", "max", "--n", "3")
    assert code == 2 and rec["checks"][0]["ok"] is False


def test_out_dir_artifacts(tmp_path, capsys):
    out = tmp_path / "o"
    code, rec, line = run(capsys, "construct", "random", "--n", "16", "--delta", "0.3", "--seed", "3",
                          "--trials", "10", "--out", str(out))
    assert code == 0
    assert (out / "construct_random.json").read_text().strip() == line
    meta = json.loads((out / "construct_random.meta.json").read_text())
    assert "timestamp" in meta and meta["wall_seconds"] >= 0
    ET.fromstring((out / "construct_random.counts.svg").read_text())
    rows = (out / "construct_random.counts.csv").read_text().splitlines()
    assert rows[0] == "seed,corners" and len(rows) == 11 and rows[1].startswith("3,")


def test_workers_match_serial(capsys):
    base = ["construct", "product", "--n", "20", "--delta", "0.5", "--seed", "7", "--trials", "6"]
    a = run(capsys, *base)[1]
    b = run(capsys, *base, "--workers", "2")[1]
    assert a["outputs"]["details"]["identity_all"] and b["outputs"]["details"]["identity_all"]
    assert a["outputs"]["mean"] == b["outputs"]["mean"] and a["outputs"]["z"] == b["outputs"]["z"]


def test_green_checkerboard(tmp_path, capsys):
    f = tmp_path / "cb.txt"
    f.write_text("".join(f"{x} {y}\n" for x in range(1, 9) for y in range(1, 9) if (x + y) % 2 == 0))
    code, rec, _ = run(capsys, "increment", "green", "--set", str(f), "--alpha", "0.0625")
    assert code == 0 and all(c["ok"] for c in rec["checks"])
    assert rec["outputs"]["new_density"] >= 0.5 * (1 + 0.0625 / 4)


def test_drive_behrend(tmp_path, capsys):
    f = tmp_path / "b.txt"
    f.write_text(behrend_corner_free(128).to_text())
    out = tmp_path / "o"
    code, rec, _ = run(capsys, "increment", "drive", "--set", str(f), "--n", "128", "--out", str(out))
    assert code == 0
    d = rec["outputs"]["densities"]
    assert len(d) >= 2 and all(b - a >= 0.01 for a, b in zip(d, d[1:]))
    lines = (out / "increment_drive.trace.jsonl").read_text().splitlines()
    assert [json.loads(x)["step"] for x in lines] == list(range(len(lines)))


@pytest.mark.parametrize("argv", [
    ["bohr", "build", "--theta", "1/3,0.1", "--eps", "0.5", "--n", "200"],
    ["bohr", "regular", "--theta", "0.3", "--eps", "0.5", "--n", "300"],
    ["bohr", "attendant", "--theta", "0.3", "--eps", "0.5", "--n", "300"],
    ["bohr", "profile", "--theta", "0.25", "--n", "3000"],
    ["construct", "cornerfree", "--n", "30"],
    ["recur", "simulate", "--n", "5", "--t", "3", "--seed", "2", "--trials", "3"],
    ["recur", "simulate", "--t", "2", "--seed", "0", "--trials", "5"],
    ["recur", "constants", "--n", "3", "--t", "2"],
    ["recur", "cover", "--n", "10", "--eps", "0.3", "--seed", "0"],
])
def test_subcommands_succeed(argv, capsys):
    code, rec, _ = run(capsys, *argv)
    assert code == 0, rec
    assert all(c["ok"] for c in rec["checks"])
