import json
import math

import numpy as np
import pytest

from nambuhj.cli import _split_list, load_config, main
from nambuhj.errors import ConfigError

WORKED = """\
# Nambu-Poisson worked example
n = 3
hamiltonians = [x1, x3]
rho_lambda = 1
rho_box = 0
section = x1^2
"""

CANONICAL = """\
n = 3
hamiltonians = ["x1*x2 + x3^2", "sin(x1) - x2*x3"]
domain = [-1:1, -1:1, -1:1]
"""

TRANSPORT = """\
n = 3
hamiltonians = [x1, x2]
params = [c=0.5]
pde_coefficients = [1, c]
pde_source = 0
"""


@pytest.fixture
def files(tmp_path):
    out = {}
    for name, text in {"worked": WORKED, "canonical": CANONICAL, "transport": TRANSPORT}.items():
        p = tmp_path / f"{name}.cfg"
        p.write_text(text)
        out[name] = str(p)
    return out


def run(capsys, *argv):
    code = main(list(argv))
    cap = capsys.readouterr()
    return code, cap.out, cap.err


# -- configuration ------------------------------------------------------------

def test_valid_config():
    cfg = load_config("n = 3\nhamiltonians = [x1, x2]\n")
    assert cfg.n == 3 and cfg.hamiltonians == ["x1", "x2"]
    assert cfg.rho_lambda == "1" and cfg.rho_box == "1"


def test_list_splitting_respects_nesting_and_quotes():
    cfg = load_config('n = 3\nhamiltonians = [pow(x1, 2), "x2 + a"]\nparams = [a=1, b=-2.5]\n')
    assert cfg.hamiltonians == ["pow(x1, 2)", "x2 + a"]
    assert cfg.params == {"a": 1.0, "b": -2.5}
    assert _split_list('["a, b", (c, d)]') == ["a, b", "(c, d)"]
    with pytest.raises(ValueError):
        _split_list("[a, (b]")


def test_arity_error():
    with pytest.raises(ConfigError) as info:
        load_config("n = 3\nhamiltonians = [x1]\n")
    assert "arity" in str(info.value)


def test_unknown_variable():
    with pytest.raises(ConfigError) as info:
        load_config("n = 3\nhamiltonians = [x4, x1]\n")
    assert "unknown identifier 'x4'" in str(info.value)


def test_errors_are_aggregated_with_lines():
    with pytest.raises(ConfigError) as info:
        load_config("n = 3\nhamiltonians = [x1, y]\nbogus = 1\nrho_box = (x1\n")
    lines = [line for line, _ in info.value.problems]
    assert lines == [2, 3, 4]


def test_missing_file():
    with pytest.raises(ConfigError):
        load_config("/nonexistent/config.cfg")


# -- subcommands --------------------------------------------------------------

def test_check_passes_on_canonical(files, capsys):
    code, out, _ = run(capsys, "check", "--config", files["canonical"], "--points", "200", "--seed", "42")
    assert code == 0
    assert json.loads(out)["ok"] is True


def test_check_fails_on_a_bad_structure(tmp_path, capsys):
    p = tmp_path / "bad.cfg"
    p.write_text("n = 3\nhamiltonians = [x1*x2, x3^2]\nrho_box = 1 + x1\n")
    code, out, _ = run(capsys, "check", "--config", str(p), "--points", "20")
    assert code == 1
    assert json.loads(out)["checks"]["fundamental_identity"]["ok"] is False


def test_vf(files, capsys):
    code, out, _ = run(capsys, "vf", "--config", files["worked"], "--at", "0.1,0.2,0.3")
    assert code == 0
    assert json.loads(out)["field"] == [0.0, -1.0, 0.0]
    code, _, err = run(capsys, "vf", "--config", files["worked"], "--at", "0.1,0.2")
    assert code == 1 and "needs 3 values" in err


def test_flow_csv(files, capsys):
    code, out, _ = run(capsys, "flow", "--config", files["worked"], "--from", "0,0,0", "--t1", "0.002", "--h", "0.001")
    assert code == 0
    assert out == "t,x1,x2,x3\n0.0,0.0,0.0,0.0\n0.001,0.0,-0.001,0.0\n0.002,0.0,-0.002,0.0\n"


def test_hj_worked_section(files, capsys):
    code, out, err = run(capsys, "hj", "--config", files["worked"], "--grid=-1:1:5,-1:1:5")
    assert code == 0
    rows = out.splitlines()
    assert rows[0] == "x1,x2,hj_residual,relatedness_n,mismatch"
    assert len(rows) == 26
    assert all(abs(float(r.split(",")[2])) < 1e-10 for r in rows[1:])
    assert json.loads(err)["theorem_equivalence"] is True


def test_hj_without_section(files, capsys):
    code, _, err = run(capsys, "hj", "--config", files["canonical"], "--grid=0:1:2,0:1:2")
    assert code == 1 and "section" in err


def test_characteristics(files, tmp_path, capsys):
    init = tmp_path / "init.csv"
    init.write_text("x1,x2,u\n" + "".join(f"0,{y!r},{math.sin(y)!r}\n" for y in np.linspace(-1, 1, 11).tolist()))
    cloud = tmp_path / "cloud.csv"
    stats = tmp_path / "stats.json"
    code, _, _ = run(capsys, "characteristics", "--config", files["transport"], "--initial", str(init),
                     "--tmax", "0.5", "--h", "0.05", "--out", str(cloud), "--stats", str(stats))
    assert code == 0
    lines = cloud.read_text().splitlines()
    assert lines[0] == "x1,x2,u,seed_id,s"
    x1, x2, u = (np.array([float(r.split(",")[i]) for r in lines[1:]]) for i in range(3))
    assert np.max(np.abs(u - np.sin(x2 - 0.5 * x1))) < 1e-8
    assert json.loads(stats.read_text())["points"] == len(lines) - 1
    code, _, _ = run(capsys, "characteristics", "--config", files["transport"], "--initial", str(init),
                     "--tmax", "0.5", "--h", "0.05", "--out", str(cloud), "--stats", str(stats),
                     "--max-residual", "1e-12")
    assert code == 1


def test_lagrangian(tmp_path, capsys):
    b3 = tmp_path / "b3.txt"
    b3.write_text("1,0,0,0\n0,1,0,0\n0,0,1,1\n")
    code, out, _ = run(capsys, "lagrangian", "--basis", str(b3), "--j", "3")
    assert code == 0 and json.loads(out) == {"annihilator_dim": 3, "dim": 3, "j": 3, "lagrangian": True}
    code, out, _ = run(capsys, "lagrangian", "--basis", str(b3), "--j", "2")
    assert code == 1 and json.loads(out)["lagrangian"] is False


def test_riccati_family(tmp_path, capsys):
    out_dir = tmp_path / "ric"
    code, out, _ = run(capsys, "riccati", "--family", "--b1", "2", "--points", "20", "--patch", "4",
                       "--out-dir", str(out_dir))
    assert code == 0
    summary = json.loads(out)
    assert summary["factorization"]["signed_agreement"] is True
    assert summary["factorization"]["literal_agreement"] is False
    assert summary["consistency"]["ok"] and summary["dynamics"]["ok"]
    assert summary["characteristics"]["max"] < 1e-4
    for name in ("factorization.json", "consistency.json", "trajectory.csv", "cloud.csv"):
        assert (out_dir / name).exists()


def test_riccati_off_family(capsys):
    code, out, _ = run(capsys, "riccati", "--a0", "1", "--a1", "0.5", "--a2", "-1", "--b1", "0.2", "--points", "10")
    assert code == 1
    assert "skipped" in json.loads(out)["dynamics"]


@pytest.mark.parametrize("argv", [
    ["bogus"],
    ["vf", "--config", "x.cfg"],
    ["check", "--config", "x.cfg", "--frobnicate"],
    ["riccati", "--family", "--b1", "2", "--a0", "5"],
    ["flow", "--config", "x.cfg", "--from", "a,b,c", "--t1", "1"],
])
def test_usage_errors_exit_2(argv, files, capsys):
    argv = [files["worked"] if a == "x.cfg" else a for a in argv]
    with pytest.raises(SystemExit) as info:
        code = main(argv)
        raise SystemExit(code)
    assert info.value.code == 2


def test_config_errors_exit_1(tmp_path, capsys):
    p = tmp_path / "bad.cfg"
    p.write_text("n = 3\nhamiltonians = [x1]\n")
    code, _, err = run(capsys, "vf", "--config", str(p), "--at", "0,0,0")
    assert code == 1 and "arity" in err


def test_outputs_are_deterministic(files, tmp_path, capsys):
    a = run(capsys, "check", "--config", files["canonical"], "--points", "30", "--seed", "7")[1]
    b = run(capsys, "check", "--config", files["canonical"], "--points", "30", "--seed", "7")[1]
    assert a == b
    c = run(capsys, "check", "--config", files["canonical"], "--points", "30", "--seed", "8")[1]
    assert json.loads(a)["seed"] != json.loads(c)["seed"]
    f1 = run(capsys, "flow", "--config", files["canonical"], "--from", "0.1,0.2,0.3", "--t1", "0.5")[1]
    f2 = run(capsys, "flow", "--config", files["canonical"], "--from", "0.1,0.2,0.3", "--t1", "0.5")[1]
    assert f1 == f2 and "\r" not in f1


def test_characteristics_stats_are_strict_json(files, tmp_path, capsys):
    # one characteristic is a curve, so every local 2D fit is rejected
    init = tmp_path / "init.csv"
    init.write_text("x1,x2,u\n0,0.1,0.3\n")
    stats = tmp_path / "stats.json"
    code, _, _ = run(capsys, "characteristics", "--config", files["transport"], "--initial", str(init),
                     "--tmax", "0.5", "--h", "0.05", "--out", str(tmp_path / "c.csv"), "--stats", str(stats),
                     "--max-residual", "1")
    text = stats.read_text()
    assert "NaN" not in text
    data = json.loads(text)
    assert data["max"] is None and data["excluded"] == data["points"]
    assert code == 1
