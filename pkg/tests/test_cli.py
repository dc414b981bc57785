import csv
import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from ueplab import cli
from ueplab.divergence import df_bound, kl_studentt_gaussian


def _run(*argv):
    out = io.StringIO()
    status = cli.run(list(argv), stdout=out)
    return status, out.getvalue()


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def _cli(*argv, env=None):
    return subprocess.run([sys.executable, "-m", "ueplab.cli", *argv], env=env,
                          capture_output=True, text=True)


# ---------------------------------------------------------------- bound

def test_bound_at_two_is_shannon_limit():
    status, text = _run("bound", "--p", "2")
    assert status == cli.EXIT_OK
    assert text.splitlines()[0] == "p,q,bound,method,err,status"
    row = _rows(text)[0]
    assert row["bound"] == "2.14472988584940e+00"
    assert float(row["bound"]) == pytest.approx(1 + math.log(math.pi), rel=1e-14)


def test_bound_by_p_or_by_q_agree():
    _, by_p = _run("bound", "--p", "1.5,3")
    _, by_q = _run("bound", "--q", "3,1.5")
    assert _rows(by_p) == _rows(by_q)


# ---------------------------------------------------------------- exit codes

@pytest.mark.parametrize("argv", [
    [], ["frobnicate"], ["bound"], ["bound", "--p", "2", "--q", "2"],
    ["usum", "--family", "student-t", "--n", "1", "--p", "2"],
    ["usum", "--family", "student-t", "--m", "fixed:1", "--n", "1..x", "--p", "2"],
    ["usum", "--family", "student-t", "--m", "half:1", "--n", "1", "--p", "2"],
    ["usum", "--family", "cauchy", "--m", "fixed:1", "--n", "1", "--p", "2"],
    ["marginal", "--family", "student-r", "--m", "nplus:0", "--n", "2", "--grid", "1:2"],
])
def test_usage_errors_exit_64(argv, capsys):
    assert cli.run(argv, stdout=io.StringIO()) == cli.EXIT_USAGE
    assert "usage" in capsys.readouterr().err


def test_undefined_rows_exit_1_and_keep_threshold():
    status, text = _run("usum", "--family", "student-t", "--m", "fixed:1", "--n", "1,2",
                        "--p", "1.2")
    assert status == cli.EXIT_DOMAIN
    ok, bad = _rows(text)
    assert ok["status"] == "ok" and ok["threshold"] == ""
    assert bad["status"] == "undefined" and bad["U"] == ""
    assert bad["threshold_kind"] == "p_min"
    assert float(bad["threshold"]) == pytest.approx(4 / 3, rel=1e-14)


def test_invalid_law_rows_are_undefined():
    status, text = _run("usum", "--family", "student-r", "--m", "fixed:1", "--n", "4",
                        "--q", "3")
    assert status == cli.EXIT_DOMAIN
    row = _rows(text)[0]
    assert row["status"] == "undefined" and row["threshold_kind"] == "m"
    assert float(row["threshold"]) == 2.0


def test_nonconvergence_exit_2_with_partial_results():
    # a tolerance below the rounding floor cannot be certified
    status, text = _run("usum", "--family", "student-r", "--m", "nplus:0", "--n", "3",
                        "--q", "2", "--tol", "1e-16")
    assert status == cli.EXIT_NONCONVERGED
    row = _rows(text)[0]
    assert row["status"] == "nonconverged"
    assert float(row["U"]) == pytest.approx(float(_rows(_run(
        "usum", "--family", "student-r", "--m", "nplus:0", "--n", "3", "--q", "2")[1])[0]["U"]),
        rel=1e-9)


# ---------------------------------------------------------------- output format

SWEEP = ["sweep", "--family", "student-t", "--m", "fixed:1,nplus:2", "--n", "1..3,6",
         "--p", "2,3"]


def test_csv_is_byte_identical_across_runs_and_threads(tmp_path):
    paths = []
    for i, threads in enumerate(("1", "3", "3")):
        path = tmp_path / f"out{i}.csv"
        env = dict(__import__("os").environ, UEPLAB_THREADS=threads)
        proc = _cli(*SWEEP, "--out", str(path), env=env)
        assert proc.returncode == 0, proc.stderr
        paths.append(path.read_bytes())
    assert paths[0] == paths[1] == paths[2]
    assert b"\r" not in paths[0]
    assert paths[0].endswith(b"\n")


def test_csv_cells_carry_fifteen_significant_digits():
    _, text = _run(*SWEEP)
    rows = _rows(text)
    assert len(rows) == 2 * 2 * 4
    for row in rows:
        mantissa = row["U"].split("e")[0]
        assert len(mantissa.replace("-", "").replace(".", "")) == 15
        assert row["method"] in ("quadrature", "closed-form")
        assert float(row["err"]) >= 0.0 and row["status"] == "ok"


def test_sweep_rows_in_deterministic_order():
    _, text = _run(*SWEEP)
    keys = [(r["m_rule"], r["p"], int(r["n"])) for r in _rows(text)]
    assert keys == [(rule, format(p, ".14e"), n) for rule in ("fixed:1", "nplus:2")
                    for p in (2.0, 3.0) for n in (1, 2, 3, 6)]


def test_fig1_gap_shrinks_along_n():
    _, text = _run("sweep", "--family", "student-t", "--m", "fixed:1", "--n", "1,4,16",
                   "--p", "2")
    gaps = [float(r["gap"]) for r in _rows(text)]
    assert all(g > 0 for g in gaps) and gaps[0] > gaps[1] > gaps[2]


def test_json_mirrors_csv():
    argv = ["kl", "--family", "student-t", "--m", "fixed:3", "--n", "1,2"]
    _, text = _run(*argv)
    status, js = _run(*argv, "--format", "json")
    assert status == cli.EXIT_OK
    body = json.loads(js)
    assert set(body) == {"meta", "rows"}
    assert body["meta"]["invocation"][:2] == ["ueplab", "kl"]
    assert body["meta"]["tolerances"]["rel_tol"] == cli.quad.DEFAULT_REL_TOL
    csv_rows = _rows(text)
    assert [list(r) for r in body["rows"]] == [list(r) for r in csv_rows]
    for j, c in zip(body["rows"], csv_rows):
        assert j["forward"] == pytest.approx(float(c["forward"]), rel=1e-14)
    assert body["rows"][0]["forward"] == pytest.approx(kl_studentt_gaussian(1, 3).forward,
                                                       rel=1e-15)


def test_infinity_and_missing_cells():
    assert cli.format_cell(math.inf) == "inf"
    assert cli.format_cell(-math.inf) == "-inf"
    assert cli.format_cell(None) == ""
    assert cli.format_cell(np.int64(7)) == "7"
    assert cli._json_cell(math.inf) == "inf"


def test_output_file(tmp_path):
    path = tmp_path / "b.json"
    status, text = _run("bound", "--q", "2.1", "--format", "json", "--out", str(path))
    assert status == 0 and text == ""
    assert json.loads(path.read_text())["rows"][0]["q"] == 2.1


# ---------------------------------------------------------------- parsing

def test_int_list_and_m_rules():
    assert cli.parse_int_list("1..3, 7,9..10") == [1, 2, 3, 7, 9, 10]
    rules = cli.parse_m_rules("fixed:1,nplus:2,times:2.5,4")
    assert [r(4) for r in rules] == [1.0, 6.0, 10.0, 4.0]
    assert [str(r) for r in rules] == ["fixed:1", "nplus:2", "times:2.5", "fixed:4"]
    for bad in ("5..2", "", "a"):
        with pytest.raises(cli.UsageError):
            cli.parse_int_list(bad)


def test_presets_expand_to_documented_invocations():
    parser = cli.build_parser()
    args = parser.parse_args(["sweep", "--preset", "fig3", "--q", "5", "--out", "x.csv"])
    cli._apply_preset(args)
    assert (args.family, args.m, args.n, args.q, args.p) == (
        "student-r", "nplus:2,times:2", "1..64", "2.1,3,10", None)
    assert args.out == "x.csv"
    args = parser.parse_args(["sweep", "--preset", "fig1"])
    cli._apply_preset(args)
    assert (args.family, args.m, args.p) == ("student-t", "fixed:1", "2,3,10")


# ---------------------------------------------------------------- other subcommands

def test_marginal_of_uniform_disc():
    status, text = _run("marginal", "--family", "student-r", "--m", "nplus:0", "--n", "2",
                        "--grid=-0.9:0.9:7")
    assert status == 0
    for row in _rows(text):
        x = float(row["x1"])
        assert float(row["pdf"]) == pytest.approx(2 / math.pi * math.sqrt(1 - x * x),
                                                  rel=1e-12)


def test_fig4_preset_compares_to_standard_gaussian():
    status, text = _run("marginal", "--preset", "fig4")
    rows = _rows(text)
    assert status == 0 and len(rows) == 4 * 121
    for row in rows:
        x = float(row["x1"])
        assert float(row["gaussian_pdf"]) == pytest.approx(
            math.exp(-0.5 * x * x) / math.sqrt(2 * math.pi), rel=1e-12)
    # the n = 10 marginal is the closest to the Gaussian
    err = {n: max(abs(float(r["pdf"]) - float(r["gaussian_pdf"])) for r in rows
                  if r["n"] == str(n)) for n in (1, 2, 5, 10)}
    assert err[10] < err[5] < err[2] < err[1]


def test_tv_rows_against_bound():
    status, text = _run("tv", "--family", "student-r", "--m", "fixed:10", "--n", "1,8,9")
    assert status == 0
    rows = _rows(text)
    assert float(rows[0]["df_bound"]) == df_bound(1, 10)
    assert float(rows[0]["tv"]) <= df_bound(1, 10)
    assert float(rows[1]["df_bound"]) == df_bound(8, 10)
    assert rows[2]["df_bound"] == ""


def test_mc_verify_small_run_is_reproducible():
    argv = ["mc-verify", "--family", "student-r", "--m", "nplus:2", "--n", "2",
            "--samples", "20000", "--seed", "5"]
    status, first = _run(*argv)
    assert status == 0
    assert _run(*argv)[1] == first
    rows = _rows(first)
    assert [r["quantity"] for r in rows] == ["power_integral", "shannon_entropy",
                                             "power_integral", "power_integral",
                                             "kl_to_matched_gaussian", "radial_gof_pvalue"]
    assert all(r["status"] == "pass" for r in rows)


def test_selftest_passes():
    status, text = _run("selftest")
    assert status == cli.EXIT_OK
    lines = text.splitlines()
    assert lines[-1] == "9/9 checks passed"
    assert all("  PASS  " in line for line in lines[:-1])


def test_console_entry_point():
    proc = subprocess.run(["ueplab", "bound", "--p", "2"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "2.14472988584940e+00" in proc.stdout
