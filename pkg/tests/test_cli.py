import json
import math
import shutil
import subprocess

import pytest

from weightapprox.cli import RunConfig, fmt, main, run, to_csv, write_atomic


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_float_format():
    assert fmt(0.1) == "0.10000000000000001"
    assert fmt(math.inf) == "inf" and fmt(3) == "3" and fmt(True) == "True"
    assert float(fmt(1 / 3)) == 1 / 3


def test_mrs_json_lines(capsys):
    code, out, _ = run_cli(capsys, "mrs", "--x", "0.5,4")
    lines = [json.loads(line) for line in out.splitlines()]
    assert code == 0
    assert lines[1]["a_x"] == pytest.approx(2.0, rel=1e-8)
    assert all(r["sigma_inverse_check"] <= 1e-8 for r in lines)


def test_weight_check(capsys):
    code, out, _ = run_cli(capsys, "weight", "check", "--family", "IterExp", "--l", "1", "--alpha", "2")
    assert code == 0 and json.loads(out)["passed"]


def test_approx_emits_result(capsys):
    code, out, _ = run_cli(capsys, "approx", "--f", "x", "--n", "0")
    d = json.loads(out)
    assert code == 0
    assert d["error"] == pytest.approx((2 * math.e) ** -0.5, abs=1e-6)
    assert set(d) >= {"degree", "basis_coeffs", "error", "p", "alternation"}


def test_malformed_expression(capsys):
    code, _, err = run_cli(capsys, "approx", "--f", "2*(x", "--n", "1")
    d = json.loads(err)
    assert code == 1
    assert d["code"] == "SyntaxError" and d["module"] == "cli" and d["offset"] == 4


def test_unknown_function(capsys):
    code, _, err = run_cli(capsys, "modulus", "--f", "foo(x)", "--t", "0.5")
    assert code == 1 and json.loads(err)["code"] == "UnknownFunction"


def test_basis_round_trip(capsys, tmp_path):
    path = tmp_path / "basis.json"
    assert main(["basis", "--nmax", "8", "--out", str(path)]) == 0
    code, out, _ = run_cli(capsys, "approx", "--f", "sin(x)", "--n", "3", "--basis", str(path))
    code2, out2, _ = run_cli(capsys, "approx", "--f", "sin(x)", "--n", "3", "--nmax", "8")
    assert code == code2 == 0
    assert json.loads(out)["error"] == pytest.approx(json.loads(out2)["error"], rel=1e-10)


def test_verify_polynomial_passes(capsys, tmp_path):
    out = tmp_path / "t.csv"
    code = main(["verify", "--theorem", "2.3", "--f", "x^3", "--r", "2", "--n-list", "6,10,14",
                 "--format", "csv", "--out", str(out)])
    assert code == 0
    rows = out.read_text().splitlines()
    assert rows[0].startswith("n,k,p,lhs,rhs,rhs2,ratio,ratio2,chain_ok,at_noise")
    assert all(float(r.split(",")[3]) <= 1e-8 for r in rows[1:])
    summary = json.loads((tmp_path / "t.csv.summary.json").read_text())
    assert summary["verdict"] == "pass" and "empirical_C" in summary


def test_csv_deterministic(tmp_path):
    args = ["verify", "--theorem", "2.4", "--f", "sin(x)", "--r", "1", "--n-list", "6,10", "--format", "csv"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_jackson_verdict_uses_spread(capsys):
    code, out, _ = run_cli(capsys, "verify", "--theorem", "jackson", "--f", "sin(x)", "--n-list", "4,8,16")
    d = json.loads(out)
    assert [r["n"] for r in d["rows"]] == [4, 8, 16]
    assert code == (0 if d["spread2"] < 10 else 2)


def test_monotone_certificate_file(tmp_path):
    cert = tmp_path / "cert.json"
    code = main(["monotone", "--f", "x", "--op", "d1", "--delta", "1", "--M", "2", "--out", str(cert)])
    d = json.loads(cert.read_text())
    assert code == 0 and d["verdict"] == "pass" and d["min_LP"] >= 0.5


def test_monotone_not_reached(capsys):
    code, out, _ = run_cli(capsys, "monotone", "--f", "x+0.45*sin(2*x)", "--op", "d1", "--delta", "0.1",
                           "--M", "2", "--n-min", "3", "--n-max", "6")
    d = json.loads(out)
    assert code == 2
    assert d["verdict"] == "fail" and d["error"]["code"] == "NotReached"
    assert [row["n"] for row in d["table"]] == [3, 4, 5, 6]


def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"f": "sin(x)", "n": 4, "p": "inf"}))
    code, out, _ = run_cli(capsys, "approx", "--config", str(cfg), "--n", "2")
    assert code == 0 and json.loads(out)["degree"] == 2


def test_config_validation():
    with pytest.raises(ValueError):
        RunConfig(command="verify", n_list=[10, 6])
    with pytest.raises(ValueError):
        RunConfig(command="verify", tolerances={"stability": 0.0})
    with pytest.raises(ValueError):
        RunConfig(command="mrs", family="Laguerre")
    assert RunConfig(command="mrs", family="erdos").family == "IterExp"


def test_missing_argument_is_error(capsys):
    assert run(RunConfig(command="approx", f="x")) == 1
    assert json.loads(capsys.readouterr().err)["module"] == "cli"


def test_atomic_write(tmp_path):
    path = tmp_path / "x.txt"
    write_atomic(str(path), "a")
    write_atomic(str(path), "b")
    assert path.read_text() == "b"
    assert [p.name for p in tmp_path.iterdir()] == ["x.txt"]
    assert to_csv(["a"], [[0.5]]) == "a\n0.5\n"


@pytest.mark.skipif(shutil.which("weightapprox") is None, reason="console script not installed")
def test_console_script():
    proc = subprocess.run(["weightapprox", "mrs", "--x", "1"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["a_x"] == pytest.approx(1.0)
