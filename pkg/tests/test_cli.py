import csv
import io
import json
import math
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from honestrd.cli import EXIT_DOMAIN, EXIT_NUMERIC, EXIT_PARSE, main, parse_grid, read_csv
from honestrd.exceptions import DomainError, ParseError

DATA = Path(__file__).parent / "data"


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def close(a, b, rel=1e-9):
    if isinstance(a, dict):
        return a.keys() == b.keys() and all(close(a[k], b[k], rel) for k in a)
    if isinstance(a, float) and isinstance(b, float):
        return math.isclose(a, b, rel_tol=rel, abs_tol=1e-14)
    return a == b


def test_toy_report_matches_golden(capsys, monkeypatch):
    monkeypatch.chdir(DATA)
    code, out, _ = run(["analyze", "-i", "toy.csv", "--variance", "known", "--C", "1"], capsys)
    assert code == 0
    got = json.loads(out)
    want = json.loads((DATA / "toy_report.json").read_text())
    assert close(got, want)
    assert set(got) == {"estimate", "maxbias", "sd", "ci", "h_plus", "h_minus", "criterion",
                        "config_echo"}


def test_C_grid_gives_one_row_per_C(capsys):
    code, out, _ = run(["analyze", "-i", str(DATA / "toy.csv"), "--variance", "known",
                        "--C-grid", "0.0002:0.1:50"], capsys)
    rows = json.loads(out)
    assert code == 0 and len(rows) == 50
    Cs = [r["config_echo"]["C"] for r in rows]
    assert Cs[0] == 0.0002 and Cs[-1] == pytest.approx(0.1)
    # worst-case bias bound grows with C, so the interval does too
    lengths = [r["criterion"]["value"] for r in rows]
    assert all(b >= a - 1e-12 for a, b in zip(lengths, lengths[1:]))


def test_csv_round_trip(capsys, tmp_path):
    base = ["analyze", "-i", str(DATA / "toy.csv"), "--variance", "known"]
    _, js, _ = run(base, capsys)
    _, text, _ = run(base + ["--format", "csv"], capsys)
    row = next(csv.DictReader(io.StringIO(text)))
    rep = json.loads(js)
    for key in ("estimate", "maxbias", "sd", "h_plus", "h_minus"):
        assert float(row[key]) == pytest.approx(rep[key], rel=1e-12)
    assert float(row["ci.lower"]) == pytest.approx(rep["ci"]["lower"], rel=1e-12)
    # feed the report back in as data: columns survive a CSV write/read cycle
    p = tmp_path / "again.csv"
    p.write_text("x,y,sigma2\n" + "".join(
        f"{v!r},{w!r},1.0\n" for v, w in [(-0.5, rep["estimate"]), (-0.1, rep["sd"]),
                                          (0.2, rep["maxbias"]), (0.7, rep["h_plus"])]))
    d = read_csv(str(p))
    assert d.y.tolist() == [rep["estimate"], rep["sd"], rep["maxbias"], rep["h_plus"]]


def test_cutoff_shift(capsys, tmp_path):
    src = np.loadtxt(DATA / "toy.csv", delimiter=",", skiprows=1)
    p = tmp_path / "shifted.csv"
    np.savetxt(p, np.c_[src[:, 0] + 10, src[:, 1:]], delimiter=",", header="x,y,sigma2",
               comments="")
    _, a, _ = run(["analyze", "-i", str(DATA / "toy.csv"), "--variance", "known"], capsys)
    _, b, _ = run(["analyze", "-i", str(p), "--cutoff", "10", "--variance", "known"], capsys)
    assert json.loads(a)["estimate"] == pytest.approx(json.loads(b)["estimate"], rel=1e-6)


def test_missing_column_names_it(tmp_path, capsys):
    p = tmp_path / "bad.csv"
    p.write_text("x,z\n1,2\n-1,3\n")
    code, _, err = run(["analyze", "-i", str(p)], capsys)
    assert code == EXIT_PARSE and "'y'" in err
    with pytest.raises(ParseError, match="'y'"):
        read_csv(str(p))


def test_bad_value_reports_line(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("x,y\n1,2\n-1,abc\n")
    with pytest.raises(ParseError, match="line 3"):
        read_csv(str(p))


def test_exit_codes_are_distinct(tmp_path, capsys):
    p = tmp_path / "one_side.csv"
    p.write_text("x,y\n1,2\n2,3\n")
    code, _, err = run(["analyze", "-i", str(p)], capsys)
    assert code == EXIT_DOMAIN and "honestrd.design" in err
    code, _, _ = run(["analyze", "-i", str(DATA / "toy.csv"), "--variance", "known"], capsys)
    assert code == 0
    assert len({EXIT_PARSE, EXIT_DOMAIN, EXIT_NUMERIC, 0}) == 4


def test_parse_grid():
    assert np.allclose(parse_grid("0:1:5"), [0, 0.25, 0.5, 0.75, 1])
    with pytest.raises(ParseError):
        parse_grid("0:1")
    with pytest.raises(DomainError):
        parse_grid("1:0:5")
    with pytest.raises(DomainError):
        parse_grid("0:1:1")


def test_lower_bound_linear_data_is_zero(tmp_path, capsys):
    x = np.r_[np.linspace(-1, -0.001, 400), np.linspace(0, 1, 400)]
    p = tmp_path / "lin.csv"
    np.savetxt(p, np.c_[x, 1 + 2 * x, np.full(x.size, 0.01)], delimiter=",",
               header="x,y,sigma2", comments="")
    code, out, _ = run(["lower-bound", "-i", str(p), "--variance", "known"], capsys)
    rows = json.loads(out)
    assert code == 0 and [r["side"] for r in rows] == ["+", "-"]
    for r in rows:
        assert r["mu_hat_0.5"] == 0.0 and r["mu_hat_0.05"] == 0.0


def test_lower_bound_too_few(capsys):
    code, _, err = run(["lower-bound", "-i", str(DATA / "toy.csv"), "--variance", "known"],
                       capsys)
    assert code == EXIT_DOMAIN and "TooFewObservations" in err


def test_efficiency_endpoints(capsys):
    code, out, _ = run(["efficiency", "--r-grid", "0.8:1.0:2"], capsys)
    rows = json.loads(out)
    assert code == 0
    assert rows[0]["onesided_eff"] == pytest.approx(0.967, abs=1e-3)
    assert rows[0]["flci_eff"] == pytest.approx(0.957, abs=1e-3)
    assert rows[1]["onesided_eff"] == 1.0
    assert rows[1]["flci_eff"] == pytest.approx(0.850, abs=1e-3)


def test_efficiency_default_grid_csv(capsys):
    code, out, _ = run(["efficiency", "--format", "csv"], capsys)
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 26
    assert set(rows[0]) == {"r", "onesided_eff", "flci_eff"}


def test_simulate_seed_repeat(capsys):
    args = ["simulate", "--design", "4", "--n", "100", "--reps", "3", "--seed", "5"]
    _, a, _ = run(args, capsys)
    _, b, _ = run(args + ["--workers", "2"], capsys)
    assert a == b
    row = json.loads(a)
    assert row["reps"] == 3 and 0 <= row["coverage"] <= 1


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "honestrd", "--version"], capture_output=True,
                       text=True, env=dict(os.environ))
    assert r.returncode == 0 and r.stdout.strip().startswith("honestrd")
