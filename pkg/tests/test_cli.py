import json
import math

import pytest

from clonekit.cli import Config, main, parse_reference, pretty
from clonekit.constructions import med3_from_medn


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_build_identify_median(tmp_path, capsys):
    path = tmp_path / "t.sexp"
    code, out, _ = run(capsys, "build", "identify-median", "--n", "9", "--k", "3", "-o", str(path))
    assert code == 0
    assert path.read_text() == "(med9 (v 0) (v 0) (v 0) (v 1) (v 1) (v 1) (v 2) (v 2) (v 2))\n"
    assert "arity=3 node_count=4 depth=1" in out


def test_build_to_stdout(capsys):
    code, out, err = run(capsys, "build", "med3-from-medn", "--n", "5")
    assert code == 0 and out == "(med5 (v 0) (v 1) (v 1) (v 2) (v 2))\n"
    assert "med5(x1, x2, x2, x3, x3)" in err


def test_build_precondition_message(capsys):
    code, _, err = run(capsys, "build", "identify-median", "--n", "7", "--k", "5")
    assert code == 2 and "not almost divisible: R=2 > 7/5" in err


def test_build_missing_flag(capsys):
    code, _, err = run(capsys, "build", "identify-median", "--n", "7")
    assert code == 2 and "--k" in err


def test_build_plan(capsys):
    code, out, _ = run(capsys, "build", "plan", "--n", "3", "--k", "5")
    plan = json.loads(out)
    assert code == 0 and plan["bound"]["bound"] == "120"
    flags = {s["kind"]: s["materializable"] for s in plan["stages"]}
    assert flags["majority-chain"] is False and flags["final-majority"] is False


def test_build_plan_direct_contains_term(capsys):
    code, out, _ = run(capsys, "build", "plan", "--n", "9", "--k", "5")
    assert code == 0 and json.loads(out)["term"].startswith("(med9")


def test_build_witness_and_cascade(capsys):
    code, out, err = run(capsys, "build", "nonminimality-witness", "--n", "4", "--k", "2")
    assert code == 0 and out == "(mnk:4:2 (v 0) (v 0) (v 1) (v 1))\n" and "equals=min_2" in err
    code, out, _ = run(capsys, "build", "cascade-step", "--m", "4")
    assert out.splitlines()[1] == "(med3 (v 0) (v 1) (v 3))"


def test_build_majority_over_budget_writes_stage(capsys):
    code, out, err = run(capsys, "build", "majority-any-arity", "--n", "3", "--k", "41", "--node-budget", "500")
    assert code == 2
    assert json.loads(out)["kind"] == "majority-chain"


def test_build_n4_route_warns(capsys):
    code, _, err = run(capsys, "build", "majority-any-arity", "--n", "4", "--k", "5")
    assert code == 0 and "warning:" in err


def test_verify_roundtrip(tmp_path, capsys):
    path = tmp_path / "m.sexp"
    run(capsys, "build", "med3-from-medn", "--n", "7", "-o", str(path))
    code, out, _ = run(capsys, "verify", str(path), "--against", "med:3")
    assert code == 0 and out.rstrip().endswith("PASS")


def test_verify_projection_fails(tmp_path, capsys):
    path = tmp_path / "v.sexp"
    path.write_text("(v 0)\n")
    code, out, _ = run(capsys, "verify", str(path), "--against", "med:3", "--format", "json")
    report = json.loads(out)
    assert code == 1 and report["reports"][0]["counterexample"] == [0, 1, 1]


def test_verify_boost_majority(tmp_path, capsys):
    path = tmp_path / "b.sexp"
    run(capsys, "build", "boost-majority-by-two", "--n", "5", "-o", str(path))
    code, _, _ = run(capsys, "verify", str(path), "--against", "majority", "--chain-sizes", "3")
    assert code == 0
    code, out, _ = run(
        capsys, "verify", str(path), "--against", "majority", "--chain-sizes", "2,3", "--seed", "0", "--seeds", "5"
    )
    assert code == 0 and out.count("oracle seed") == 5


def test_verify_even_boost_reports_failure(tmp_path, capsys):
    path = tmp_path / "b6.sexp"
    run(capsys, "build", "boost-majority-by-two", "--n", "6", "-o", str(path))
    code, out, _ = run(capsys, "verify", str(path), "--against", "majority", "--chain-sizes", "3", "--seeds", "5")
    assert code == 1 and "FAIL" in out


def test_verify_parse_error(tmp_path, capsys):
    path = tmp_path / "bad.sexp"
    path.write_text("(med3 (v 0) (v 1))")
    code, _, err = run(capsys, "verify", str(path), "--against", "med:3")
    assert code == 2 and err


def test_verify_budget_error(tmp_path, capsys):
    path = tmp_path / "m.sexp"
    path.write_text("(med3 (v 0) (v 1) (v 2))")
    code, _, err = run(capsys, "verify", str(path), "--against", "med:3", "--eval-budget", "5")
    assert code == 2 and "evaluate_all_boolean" in err


def test_json_is_byte_stable(tmp_path, capsys):
    path = tmp_path / "m.sexp"
    path.write_text("(med5 (v 0) (v 1) (v 1) (v 2) (v 2))")
    first = run(capsys, "verify", str(path), "--against", "med:3", "--format", "json", "--workers", "2")[1]
    second = run(capsys, "verify", str(path), "--against", "med:3", "--format", "json")[1]
    assert first == second
    a = run(capsys, "bound", "--n", "7", "--format", "json")[1]
    assert a == run(capsys, "bound", "--n", "7", "--format", "json")[1]


def test_bound_tables(capsys):
    code, out, _ = run(capsys, "bound", "--n", "5")
    assert code == 0 and "\t19/30" in out and out.rstrip().endswith("b = 120")
    _, out, _ = run(capsys, "bound", "--n", "3")
    assert "degenerate" in out
    _, out, _ = run(capsys, "bound", "--n", "7")
    assert f"b = {math.comb(6545, 3)}" in out and "e+" not in out
    _, out, _ = run(capsys, "bound", "--n", "7", "--format", "json")
    payload = json.loads(out)
    assert payload["bound"] == "46706638440" and payload["rows"][2]["r_j"] == "33/85"


def test_bound_errors(capsys):
    assert run(capsys, "bound", "--n", "4")[0] == 2
    assert run(capsys, "bound", "--n", "11", "--max-steps", "2")[0] == 2


def test_classify(capsys):
    code, out, _ = run(capsys, "classify", "--n", "5", "--k", "3")
    assert code == 0 and "Minimal(median)" in out
    _, out, _ = run(capsys, "classify", "--n", "4", "--k", "2", "--format", "json")
    assert json.loads(out)["witness"] == "(mnk:4:2 (v 0) (v 0) (v 1) (v 1))"
    _, out, _ = run(capsys, "classify", "--table", "7", "--format", "json")
    grid = json.loads(out)
    for cell in grid:
        n, k = cell["n"], cell["k"]
        assert cell["minimal"] == (k in (1, n) or (n % 2 == 1 and k == (n + 1) // 2))
    assert run(capsys, "classify", "--n", "5")[0] == 2


def test_cascade_sim(capsys):
    code, out, _ = run(capsys, "cascade-sim", "--n", "5", "--steps", "2", "--start", "distinct", "--format", "json")
    rows = json.loads(out)["steps"]
    assert [r["median_count"] for r in rows[:2]] == [1, 4] and rows[2]["median_count"] >= 76
    assert [r["k_j"] for r in rows] == ["1", "4", "76"]
    _, out, _ = run(capsys, "cascade-sim", "--n", "5", "--steps", "1", "--start", "constant")
    assert out.splitlines()[-1].split("\t")[:3] == ["1", "10", "10"]
    _, out, _ = run(capsys, "cascade-sim", "--n", "7", "--steps", "2", "--format", "json")
    rows = json.loads(out)["steps"]
    assert [r["width"] for r in rows[1:]] == [35, 6545]
    assert rows[1]["median_count"] >= 9 and rows[2]["median_count"] >= 2541


def test_cascade_sim_budget(capsys):
    code, _, err = run(capsys, "cascade-sim", "--n", "5", "--steps", "3", "--width-budget", "1000")
    assert code == 2 and "width budget" in err


def test_env_fallback_and_flag_precedence(tmp_path, capsys, monkeypatch):
    path = tmp_path / "m.sexp"
    path.write_text("(med3 (v 0) (v 1) (v 2))")
    monkeypatch.setenv("CLONEKIT_EVAL_BUDGET", "5")
    assert run(capsys, "verify", str(path), "--against", "med:3")[0] == 2
    assert run(capsys, "verify", str(path), "--against", "med:3", "--eval-budget", "100")[0] == 0


def test_config_validation():
    with pytest.raises(ValueError):
        Config(workers=0)
    with pytest.raises(ValueError):
        Config(chain_sizes=(1,))


def test_parse_reference():
    assert parse_reference("med:5") == ("equal", (5, 3))
    assert parse_reference("mnk:4:2") == ("equal", (4, 2))
    assert parse_reference("majority") == ("majority", None)
    for bad in ("med:4", "mnk:2:3", "foo"):
        with pytest.raises(Exception):
            parse_reference(bad)


def test_pretty_is_one_indexed():
    assert pretty(med3_from_medn(5)) == "med5(x1, x2, x2, x3, x3)"
