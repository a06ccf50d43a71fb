import csv
import json
import subprocess
import sys
from datetime import date

import numpy as np
import pytest

from nmcopula.cli import main
from nmcopula.data import OhlcvSeries, compute_returns, ingest_csv
from nmcopula.estimation import PseudoSample, fit
from nmcopula.exceptions import (
    DataError,
    DuplicateDateError,
    NonPositivePriceError,
    ParseError,
    TooShortSeriesError,
    UnmappedColumnError,
)
from nmcopula.io import RESULT_COLUMNS, fmt, read_columns, read_results_csv, write_columns, write_results


def write_text(path, text):
    path.write_text(text)
    return path


BARS = "date,close,volume\n2020-02-03,100,10\n2020-02-04,110,20\n2020-02-05,99,5\n"


# --------------------------------------------------------------------------
# data


def test_ingest_basic(tmp_path):
    s = ingest_csv(write_text(tmp_path / "a.csv", BARS))
    assert len(s) == 3
    assert s.dates[0] == date(2020, 2, 3)
    np.testing.assert_array_equal(s.volume, [10, 20, 5])


def test_ingest_sorts_rows(tmp_path):
    lines = BARS.strip().split("\n")
    shuffled = "\n".join([lines[0], lines[3], lines[1], lines[2]]) + "\n"
    a = ingest_csv(write_text(tmp_path / "a.csv", BARS))
    b = ingest_csv(write_text(tmp_path / "b.csv", shuffled))
    assert a.dates == b.dates
    np.testing.assert_array_equal(a.close, b.close)


def test_ingest_column_mapping_and_format(tmp_path):
    text = "Day,Adj Close,Vol\n03/02/2020,100,1\n04/02/2020,101,2\n"
    s = ingest_csv(write_text(tmp_path / "a.csv", text), "day", "adj close", "vol", "%d/%m/%Y")
    assert s.dates[1] == date(2020, 2, 4)


def test_ingest_errors(tmp_path):
    with pytest.raises(DuplicateDateError, match="2020-02-04"):
        ingest_csv(write_text(tmp_path / "d.csv", BARS + "2020-02-04,111,3\n"))
    with pytest.raises(ParseError) as err:
        ingest_csv(write_text(tmp_path / "p.csv", BARS + "2020-02-06,abc,3\n"))
    assert err.value.line == 5
    with pytest.raises(ParseError):
        ingest_csv(write_text(tmp_path / "q.csv", BARS + "notadate,1,3\n"))
    with pytest.raises(UnmappedColumnError):
        ingest_csv(write_text(tmp_path / "u.csv", BARS), close_col="price")


def test_series_invariants():
    with pytest.raises(TooShortSeriesError):
        OhlcvSeries((date(2020, 1, 1),), [1.0], [1.0])
    with pytest.raises(DataError):
        OhlcvSeries((date(2020, 1, 2), date(2020, 1, 1)), [1.0, 2.0], [1.0, 1.0])
    with pytest.raises(DataError):
        OhlcvSeries((date(2020, 1, 1), date(2020, 1, 2)), [1.0, np.nan], [1.0, 1.0])


def test_returns():
    d = tuple(date(2020, 1, k) for k in range(1, 4))
    r = compute_returns(OhlcvSeries(d[:2], [100.0, 110.0], [1.0, 7.0]))
    np.testing.assert_allclose(r.r, [0.10])
    np.testing.assert_array_equal(r.w, [7.0])
    assert r.dates == (d[1],)
    np.testing.assert_array_equal(compute_returns(OhlcvSeries(d, [100.0] * 3, [1.0] * 3)).r, [0.0, 0.0])
    with pytest.raises(NonPositivePriceError):
        compute_returns(OhlcvSeries(d, [100.0, 0.0, 3.0], [1.0] * 3))


def test_625_prices_give_624_returns():
    d = tuple(np.datetime64("2020-02-01") + np.arange(625))
    p = 100 * np.exp(np.cumsum(np.random.default_rng(0).normal(0, 0.01, 625)))
    assert compute_returns(OhlcvSeries(d, p, np.ones(625))).n == 624


# --------------------------------------------------------------------------
# io


def test_fmt():
    assert fmt(0.1 + 0.2) == "0.3"
    assert fmt(123456789.123) == "123456789.1"
    assert fmt(None) == "" and fmt(True) == "true" and fmt(3) == "3"


def test_results_csv_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    xy = rng.random((300, 2))
    r = fit("frank", "f2", PseudoSample.from_data(xy[:, 0], xy[:, 1]))
    path = tmp_path / "r.csv"
    write_results([r], path)
    rows = read_results_csv(path)
    assert rows[0]["a"] == float(fmt(r.estimates["a"]))
    assert rows[0]["aic"] == float(fmt(r.aic))
    # printing a parsed table gives the same text
    with open(path, newline="") as fh:
        text = list(csv.reader(fh))
    again = [[fmt(rows[0][c]) if not isinstance(rows[0][c], str) else rows[0][c] for c in RESULT_COLUMNS]]
    assert text[1] == again[0]


def test_columns_round_trip(tmp_path):
    x = np.random.default_rng(2).random((50, 2))
    write_columns(tmp_path / "a.csv", x.T, ["u", "v"])
    names, back = read_columns(tmp_path / "a.csv")
    write_columns(tmp_path / "b.csv", back.T, names)
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    np.testing.assert_allclose(back, x, rtol=1e-9)


# --------------------------------------------------------------------------
# command line


def run(argv):
    return main([str(a) for a in argv])


def test_simulate_deterministic(tmp_path):
    argv = ["simulate", "--family", "gaussian", "--rho", "0.95", "--transform", "scarsini",
            "--params", "0.3,0.4,0.55,0.65,0.9", "--n", "1000", "--seed", "7"]
    assert run(argv + ["--out", tmp_path / "a.csv"]) == 0
    assert run(argv + ["--out", tmp_path / "b.csv"]) == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    names, data = read_columns(tmp_path / "a.csv")
    assert names == ["u", "v"] and data.shape == (1000, 2)


def test_simulate_to_stdout(capsys):
    assert run(["simulate", "--family", "frank", "--theta", "-3", "--n", "5", "--seed", "1"]) == 0
    assert len(capsys.readouterr().out.strip().splitlines()) == 6


def test_transform_plot(tmp_path):
    out = tmp_path / "g.csv"
    assert run(["transform-plot", "--transform", "f2", "--params", "-0.159780111,0.5415870", "--out", out]) == 0
    names, data = read_columns(out)
    assert names == ["x", "g", "f"] and data.shape == (1001, 3)
    x, g, f = data.T
    f0 = f[0]
    assert g[np.argmin(np.abs(x - f0))] == pytest.approx(0.0, abs=2e-3)
    assert np.all(np.diff(g[x < f0]) <= 1e-9) and np.all(np.diff(g[x >= f0]) >= -1e-9)


def test_simulate_then_fit_recovers(tmp_path):
    sim = tmp_path / "sim.csv"
    assert run(["simulate", "--family", "frank", "--theta", "9.0850997", "--transform", "f2",
                "--params", "-0.159780111,0.5415870", "--n", "5000", "--seed", "3", "--out", sim]) == 0
    out = tmp_path / "fit.json"
    assert run(["fit", "--input", sim, "--family", "frank", "--transform", "f2", "--out", out]) == 0
    res = json.loads(out.read_text())["results"][0]
    assert res["a"] == pytest.approx(-0.159780111, abs=0.10)
    assert res["c"] == pytest.approx(0.5415870, abs=0.10)
    assert res["theta"] == pytest.approx(9.0850997, abs=1.0)
    assert res["model"]["transform"]["kind"] == "f2"
    assert res["model"]["transform"]["params"] == pytest.approx([res["a"], res["c"]], rel=1e-9)


def test_select_writes_full_table(tmp_path):
    sim = tmp_path / "sim.csv"
    run(["simulate", "--family", "frank", "--theta", "9.0850997", "--transform", "f2",
         "--params", "-0.159780111,0.5415870", "--n", "1000", "--seed", "4", "--out", sim])
    out = tmp_path / "sel.csv"
    assert run(["select", "--input", sim, "--out", out]) == 0
    rows = read_results_csv(out)
    assert len(rows) == 21
    assert sum(r["winner"] for r in rows) == 1
    assert rows[0]["winner"] and rows[0]["rank"] == 1


def test_select_from_prices_with_config(tmp_path):
    rng = np.random.default_rng(5)
    n = 400
    p = 100 * np.exp(np.cumsum(rng.normal(0, 0.01, n)))
    vol = rng.integers(1000, 5000, n)
    lines = ["date,close,volume"] + [f"{np.datetime64('2020-02-01') + k},{p[k]:.4f},{vol[k]}" for k in range(n)]
    bars = write_text(tmp_path / "bars.csv", "\n".join(lines) + "\n")
    cfg = write_text(tmp_path / "cfg.json", json.dumps({"grid": [["frank", "f1"], ["gumbel", None]], "criterion": "bic"}))
    out = tmp_path / "sel.json"
    assert run(["select", "--input", bars, "--config", cfg, "--out", out]) == 0
    payload = json.loads(out.read_text())
    assert payload["n"] == n - 1 and payload["criterion"] == "bic"
    assert len(payload["results"]) == 2


@pytest.mark.parametrize(
    "argv,code",
    [
        (["simulate", "--family", "frank"], 1),
        (["simulate", "--family", "frank", "--theta", "0"], 1),
        (["simulate", "--family", "frank", "--theta", "2", "--transform", "f2", "--params", "0.9,0.05"], 1),
        (["simulate", "--family", "gaussian", "--rho", "0.5", "--transform", "scarsini", "--params", "0.5,0.4,0.5,0.6,0.9"], 1),
        (["bogus"], 1),
        (["fit", "--input", "missing.csv", "--family", "frank"], 2),
    ],
)
def test_exit_codes(argv, code, capsys):
    if argv[0] == "bogus":
        with pytest.raises(SystemExit) as err:
            run(argv)
        assert err.value.code == code
    else:
        assert run(argv) == code


def test_data_error_exit_code(tmp_path):
    bad = write_text(tmp_path / "bad.csv", BARS + "2020-02-04,111,3\n")
    assert run(["fit", "--input", bad, "--family", "frank"]) == 2
    unmapped = write_text(tmp_path / "u.csv", BARS)
    assert run(["fit", "--input", unmapped, "--family", "frank", "--close-col", "price"]) == 2


def test_entry_point_runs(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "nmcopula.cli", "transform-plot", "--transform", "bernoulli", "--points", "3"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert proc.stdout.splitlines() == ["x,g", "0,0", "0.5,1", "1,1"]
