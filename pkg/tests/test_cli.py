import json
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from amop import corpus
from amop.cli import main
from amop.report import format_float, render


def spec(name):
    return str(corpus.path(name))


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.mark.parametrize("name, code", [
    ("identity_growth.spec", 0),
    ("kernel_counterexample.spec", 1),
    ("rotating_growth.json", 0),
    ("nilpotent.spec", 0),
])
def test_classify_exit_codes(name, code, capsys):
    rc, out, err = run(["classify", spec(name)], capsys)
    assert rc == code
    doc = json.loads(out)
    assert doc["classification"]["verdict"] == ("AM" if code == 0 else "NotAM")
    assert err.startswith("verdict:")


def test_classify_undecidable(tmp_path, capsys):
    path = tmp_path / "u.spec"
    path.write_text("formula = n^(1/n)\n")
    rc, out, _ = run(["classify", str(path)], capsys)
    assert rc == 2
    assert json.loads(out)["classification"]["verdict"] == "Undecidable"


def test_counterexample_report(capsys):
    _, out, err = run(["classify", spec("kernel_counterexample.spec")], capsys)
    doc = json.loads(out)
    assert doc["bounded_transform"]["spectrum"]["essential"] == ["0", "1"]
    assert "essential spectrum of Z_T: {0, 1}" in err


def test_verify_passes(capsys):
    rc, out, _ = run(["verify", spec("squares_kernel2.spec"), "--sizes", "4,8,16", "--conjugate"], capsys)
    assert rc == 0
    doc = json.loads(out)
    assert doc["passed"] is True
    assert doc["plan"]["sizes"] == [4, 8, 16]


def test_solve(capsys, tmp_path):
    out_path = tmp_path / "sol.json"
    rc, _, err = run(["solve", spec("rank_deficient.spec"), spec("rank_deficient.rhs"), "-o", str(out_path)], capsys)
    assert rc == 0
    doc = json.loads(out_path.read_text())
    x = [complex(v["re"], v["im"]) for v in doc["solution"]]
    a = np.array([[1, 2, 3], [2, 4, 6], [1, 0, 1]], dtype=float)
    np.testing.assert_allclose(x, np.linalg.pinv(a) @ [1, 2, 3], atol=1e-12)
    assert "x = [" in err


@pytest.mark.parametrize("argv", [
    [],
    ["bogus"],
    ["classify"],
    ["verify", "x.spec", "--sizes", "0,4"],
    ["verify", "x.spec", "--sizes", "4,a"],
    ["verify", "x.spec", "--checks", "nope"],
    ["verify", "x.spec", "--seed", "q"],
])
def test_usage_errors(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        rc = main(argv)
        raise SystemExit(rc)
    assert exc.value.code == 64


def test_data_errors(tmp_path, capsys):
    bad = tmp_path / "bad.spec"
    bad.write_text("formula = n +\n")
    assert run(["classify", str(bad)], capsys)[0] == 65
    assert run(["verify", spec("nilpotent.spec")], capsys)[0] == 65
    assert run(["solve", spec("identity.spec"), spec("rank_deficient.rhs")], capsys)[0] == 65
    short = tmp_path / "short.rhs"
    short.write_text("1 2\n")
    rc, _, err = run(["solve", spec("rank_deficient.spec"), str(short)], capsys)
    assert rc == 65
    assert "data error" in err
    small = tmp_path / "small.spec"
    small.write_text("eigenvalues = 1, 2\n")
    assert run(["verify", str(small), "--sizes", "4"], capsys)[0] == 65


def test_io_errors(tmp_path, capsys):
    assert run(["classify", str(tmp_path / "missing.spec")], capsys)[0] == 74
    out = tmp_path / "no" / "such" / "dir.json"
    assert run(["classify", spec("identity.spec"), "-o", str(out)], capsys)[0] == 74


def test_reports_are_byte_identical(tmp_path, capsys):
    for argv in (["classify", spec("two_cluster.spec")],
                 ["verify", spec("rational_growth.spec"), "--conjugate", "--seed", "5"],
                 ["solve", spec("rank_deficient.spec"), spec("rank_deficient.rhs")]):
        paths = [tmp_path / f"r{i}.json" for i in range(2)]
        for p in paths:
            main(argv + ["-o", str(p)])
        assert paths[0].read_bytes() == paths[1].read_bytes()
    capsys.readouterr()


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "amop", "classify", spec("identity.spec")],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["classification"]["verdict"] == "AM"


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_float_format_round_trips(x):
    assert json.loads(format_float(x)) == x


def test_float_format():
    assert format_float(0.1) == "1.0000000000000001e-01"
    assert format_float(1e-300) == "1.0000000000000000e-300"
    assert format_float(float("inf")) == '"inf"'
    assert render({"b": 1.5, "a": [1j]}) == (
        '{\n  "a": [\n    {\n      "im": 1.0000000000000000e+00,\n      "re": 0.0000000000000000e+00\n    }\n  ],\n'
        '  "b": 1.5000000000000000e+00\n}\n')
