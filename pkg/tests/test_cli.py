import json
import subprocess
import sys

import numpy as np
import pytest

from polyrep import cli, fixtures
from polyrep import plotting
from polyrep.oracle import Box
from polyrep.system import points_json


@pytest.fixture
def files(tmp_path):
    out = {}
    for name in ("square", "triangle", "pentagon", "disk", "interval"):
        p = tmp_path / f"{name}.json"
        p.write_text(fixtures.get(name).dumps())
        out[name] = p
    out["square_X"] = tmp_path / "square_X.json"
    out["square_X"].write_text(points_json(fixtures.vertices("square")))
    out["dir"] = tmp_path
    return out


def run(*argv):
    return cli.main([str(a) for a in argv])


def test_n_of_square(files, capsys):
    assert run("n-of", "--json", files["square"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["n"] == 2 and rep["finite"] and len(rep["X"]) == 4
    got = np.array(rep["X"])
    for v in fixtures.vertices("square"):
        assert np.abs(got - v).max(axis=1).min() <= 1e-6


def test_n_of_disk_text(files, capsys):
    assert run("n-of", files["disk"]) == 0
    out = capsys.readouterr().out
    assert "n = 1" in out and "infinite" in out


def test_malformed_inputs_exit_2(files, capsys):
    bad = files["dir"] / "bad.json"
    bad.write_text("{not json")
    assert run("n-of", bad) == 2
    assert run("n-of", files["dir"] / "missing.json") == 2
    cfg = files["dir"] / "cfg.json"
    cfg.write_text('{"tol": -1}')
    assert run("--config", cfg, "n-of", files["square"]) == 2


def test_argparse_usage_error_exit_2():
    with pytest.raises(SystemExit) as exc:
        cli.main(["reduce"])
    assert exc.value.code == 2


def test_reduce_then_verify_square(files, capsys):
    red = files["dir"] / "red.json"
    assert run("--out", red, "reduce", files["square"], "--mode", "n", "--X", files["square_X"]) == 0
    data = json.loads(red.read_text())
    assert len(data["outputs"]) == 2 and data["verification"]["equivalence"]["passed"]
    assert all(data["verification"]["audit"].values())
    assert (files["dir"] / "red_q.csv").exists() and (files["dir"] / "red_q.png").exists()
    assert run("verify", red) == 0

    data["outputs"] = data["outputs"][:1] + [_perturb(data["outputs"][1])]
    bad = files["dir"] / "bad_red.json"
    bad.write_text(json.dumps(data))
    assert run("verify", bad) == 3

    data["outputs"] = []
    empty = files["dir"] / "empty_red.json"
    empty.write_text(json.dumps(data))
    assert run("verify", empty) == 2


def _perturb(out):
    # scale the first coefficient of a plain polynomial output by 1.1
    term = out["poly"]["terms"][0]
    from fractions import Fraction
    term["c"] = str(Fraction(term["c"]) * Fraction(11, 10))
    return out


def test_reduce_pentagon_n_plus_1(files, capsys):
    red = files["dir"] / "pent.json"
    assert run("reduce", files["pentagon"], "--mode", "n+1", "--out", red) == 0
    assert len(json.loads(red.read_text())["outputs"]) == 3
    assert run("verify", red) == 0


def test_reduce_hypothesis_violation_exit_5(files, capsys):
    assert run("reduce", files["disk"], "--mode", "n+1") == 5
    assert "n < s" in capsys.readouterr().err


def test_reduction_file_round_trip(files):
    red = files["dir"] / "int.json"
    assert run("reduce", files["interval"], "--mode", "n+1", "--out", red) == 0
    from polyrep.construct import Reduction
    text = red.read_text().rstrip("\n")
    assert Reduction.loads(text).dumps() == text


def test_approx_triangle(files, capsys):
    out = files["dir"] / "ap.json"
    assert run("approx", files["triangle"], "--eps", "0.1", "--out", out) == 0
    rep = json.loads(out.read_text())
    assert rep["hausdorff"]["upper"] <= 0.1
    csv = files["dir"] / "ap_grid.csv"
    assert csv.exists() and (files["dir"] / "ap_grid.png").exists()
    pts, vals = plotting.read_csv(csv)
    assert pts.shape[1] == 2 and len(vals) == len(pts)


def test_approx_vanish_at(files, capsys):
    out = files["dir"] / "apv.json"
    assert run("approx", files["square"], "--eps", "0.1", "--vanish-at", files["square_X"], "--out", out) == 0
    rep = json.loads(out.read_text())
    assert max(abs(v) for v in rep["values_at_X"]) <= 1e-9


def test_approx_bad_eps_exit_2(files):
    assert run("approx", files["triangle"], "--eps", "0") == 2
    assert run("approx", files["triangle"], "--eps", "-0.5") == 2


def test_certify_bounded(files, capsys):
    assert run("certify-bounded", files["disk"], "--M", "0", "--eps", "0.5", "--r-max", "10") == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["verdict"]["kind"] == "PROVED" and rep["radius"] == pytest.approx(1.5 ** 0.5, abs=1e-6)


def test_seed_and_config_flags(files, capsys):
    cfg = files["dir"] / "cfg.json"
    cfg.write_text(json.dumps({"oracle": {"tol": 1e-7}, "grid": {"resolution": 51}}))
    assert run("--config", cfg, "--seed", "3", "n-of", "--json", files["triangle"]) == 0
    assert json.loads(capsys.readouterr().out)["n"] == 2


def test_console_script_keeps_stdout_clean(files):
    r = subprocess.run([sys.executable, "-m", "polyrep.cli", "approx", str(files["triangle"]), "--eps", "0.2"],
                       capture_output=True, text=True, timeout=600)
    assert r.returncode == 0
    assert json.loads(r.stdout)["hausdorff"]["upper"] <= 0.2


def test_plotting_1d_and_3d(tmp_path):
    (x,) = __import__("polyrep.poly", fromlist=["Polynomial"]).Polynomial.variables(1)
    files = plotting.emit(tmp_path / "line", (x * (1 - x)).evaluate_many, Box.cube(1, 1.0), 21)
    assert set(files) == {"csv", "png"}
    pts, vals = plotting.read_csv(files["csv"])
    assert np.allclose(vals, pts[:, 0] * (1 - pts[:, 0]))
    files3 = plotting.emit(tmp_path / "cube", lambda p: p.sum(axis=1), Box.cube(3, 1.0), 5)
    assert set(files3) == {"csv"}
