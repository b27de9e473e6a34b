import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rosctl.cli import run
from rosctl.io import csv_text, format_float, json_text, paths_table, to_jsonable


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_float_format_round_trips(x):
    assert float(format_float(x)) == x


def test_non_finite_formatting():
    assert [format_float(v) for v in (math.nan, math.inf, -math.inf)] == ["nan", "inf", "-inf"]
    assert json.loads(json_text({"v": math.inf, "w": np.float64(0.1)})) == {"v": "inf", "w": 0.1}


def test_csv_is_rfc_style():
    text = csv_text(["a", "b"], [(1, 0.1), ("x,y", True)])
    assert text == 'a,b\r\n1,0.1\r\n"x,y",true\r\n'


def test_paths_table_layout():
    header, rows = paths_table(np.array([0.0, 0.5]), np.array([[0.0, 1.0], [0.0, 2.0]]))
    assert header == ["t", "path_0", "path_1"]
    assert rows.tolist() == [[0.0, 0.0, 0.0], [0.5, 1.0, 2.0]]


def test_jsonable_handles_numpy_and_nesting():
    out = to_jsonable({"a": np.arange(3), "b": (np.int64(2), np.bool_(True)), 3: None})
    assert out == {"a": [0, 1, 2], "b": [2, True], "3": None}


def _report(capsys, argv):
    code = run(argv + ["--json"])
    return code, json.loads(capsys.readouterr().out)


def test_ergodic_reference(capsys):
    code, rep = _report(capsys, ["ergodic", "--b1", "1", "--b2", "1", "--q", "1", "--r", "1", "--h", "0.75"])
    assert code == 0
    assert rep["result"]["gain"] == pytest.approx(-4.64575, abs=1e-5)
    assert rep["result"]["cost"] == pytest.approx(2.156291, abs=1e-6)
    assert rep["config"]["seed"] == 0


def test_config_precedence(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    cfg.write_text('q = 3.0\nseed = 5\n[ergodic]\nr = 2.0\nb1 = -1.0\n')
    _, rep = _report(capsys, ["ergodic", "--config", str(cfg), "--b1", "0.5"])
    c = rep["config"]
    assert c["b1"] == 0.5  # flag beats file
    assert c["r"] == 2.0 and c["q"] == 3.0 and c["seed"] == 5  # file beats default
    assert c["b2"] == 1.0  # default


def test_exit_codes(tmp_path, capsys):
    assert run(["ergodic", "--bogus", "1"]) == 2
    assert run(["ergodic", "--h", "1.5", "--quiet"]) == 2
    assert run(["zero-sum", "--b1", "1", "--quiet"]) == 3
    bad = tmp_path / "bad.toml"
    bad.write_text("[ergodic]\nnot_a_key = 1\n")
    assert run(["ergodic", "--config", str(bad), "--quiet"]) == 2
    assert run(["verify", "--only", "99", "--quiet"]) == 2
    capsys.readouterr()


def test_suboptimality_csv(tmp_path):
    out = tmp_path / "sub.csv"
    assert run(["suboptimality", "--h", "0.75", "--h-grid", "0.5:0.95:0.05", "--out", str(out), "--quiet"]) == 0
    rows = list(csv.DictReader(out.open(newline="")))
    gaps = [float(r["gap"]) for r in rows]
    assert min(gaps) >= 0
    assert float(rows[int(np.argmin(gaps))]["h_assumed"]) == pytest.approx(0.75)
    meta = json.loads((tmp_path / "sub.csv.json").read_text())
    assert meta["command"] == "suboptimality" and "h_grid" in meta["config"]


def test_simulate_is_byte_deterministic(tmp_path):
    argv = ["simulate", "--kind", "rosenblatt", "--h", "0.75", "--n", "4096", "--t", "1", "--paths", "100", "--seed", "42"]
    blobs = []
    for i in range(2):
        out = tmp_path / f"s{i}.csv"
        assert run(argv + ["--out", str(out), "--quiet"]) == 0
        blobs.append(out.read_bytes())
    assert blobs[0] == blobs[1]
    header = blobs[0].split(b"\r\n", 1)[0].decode()
    assert header.split(",")[:2] == ["t", "path_0"] and header.endswith("path_99")


def test_nash_and_cournot_commands(capsys):
    code, rep = _report(capsys, ["nash", "--b1", "-1", "--b2", "1,1", "--q", "1,1", "--r", "1,1"])
    assert code == 0
    code, rep = _report(capsys, ["cournot", "--price-of-simplicity"])
    assert code == 0


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "rosctl", "variance-aware", "--json"], capture_output=True, text=True)
    assert proc.returncode == 0
    rep = json.loads(proc.stdout)
    assert rep["result"]["gain_mean"] == pytest.approx(-1.0)
    assert rep["result"]["cost_mean"] == pytest.approx(0.125)
