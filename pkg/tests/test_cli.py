import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from helpers import FIXTURES
from netprice import cli, files
from netprice import equilibria as eq


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def write_model(tmp_path, data, name="model.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return path


def linear_model(**overrides):
    data = {"firms": [{"name": "a", "cost": 0}, {"name": "b", "cost": 0}],
            "edges": [["a", "b"]], "c0": 0, "demand": {"family": "linear", "a": 1, "b": 1}}
    data.update(overrides)
    return data


def test_solve_json(capsys):
    code, out, _ = run(capsys, "solve", FIXTURES / "six_firm_linear.json", "--format", "json")
    assert code == 0
    data = json.loads(out)
    assert data["P_star"] == pytest.approx(13 / 14, abs=1e-11)
    assert str(data["P_star"]).startswith("0.928571")
    assert data["firms"] == ["L", "T", "F", "C", "D", "R"]


def test_solve_json_round_trip(capsys):
    _, out, _ = run(capsys, "solve", FIXTURES / "six_firm_logit.json", "--format", "json")
    back = eq.EquilibriumReport.from_dict(json.loads(out))
    rep = eq.solve(files.load_model(FIXTURES / "six_firm_logit.json"))
    assert back.labels == rep.labels
    for name in eq.EquilibriumReport.FIELDS:
        assert np.allclose(getattr(back, name), getattr(rep, name), rtol=1e-11, atol=1e-300)


def test_solve_exact(capsys):
    code, out, _ = run(capsys, "solve", FIXTURES / "diamond_linear.json", "--exact", "--format", "json")
    assert code == 0
    assert json.loads(out)["exact"] == {"P_star": "7/8", "prices": ["3/8", "1/4", "1/8", "1/8"],
                                        "cs": "1/128", "dwl": "49/128", "sw": "15/128"}


def test_solve_table_uses_four_decimals(capsys):
    code, out, _ = run(capsys, "solve", FIXTURES / "six_firm_logit.json")
    assert code == 0
    assert out.startswith("P* = 6.0313")
    assert "1.0096" in out and "1.0024" in out


def test_solve_csv(capsys):
    code, out, _ = run(capsys, "solve", FIXTURES / "six_firm_linear.json", "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0
    assert [r["firm"] for r in rows] == ["L", "T", "F", "C", "D", "R", "total"]
    assert float(rows[-1]["price"]) == pytest.approx(13 / 14, abs=1e-11)


def test_solve_with_verification(capsys):
    code, out, _ = run(capsys, "solve", FIXTURES / "chain2_logit.json", "--verify", "--format", "json")
    assert code == 0
    assert {r["result"] for r in json.loads(out)["verification"]} == {"pass"}


def test_validate(capsys):
    code, out, _ = run(capsys, "validate", FIXTURES / "six_firm_linear.json")
    assert code == 0 and "depth 3" in out
    code, out, _ = run(capsys, "validate", FIXTURES / "six_firm_linear.json", "--format", "json")
    assert json.loads(out)["path_totals"] == [6, 6, 1, 0, 0, 0]


def test_validate_cyclic(capsys):
    code, _, err = run(capsys, "validate", FIXTURES / "cyclic.json")
    assert code == 1
    assert "Cycle: L→T→L" in err


def test_compare_merger_panel1(capsys):
    code, out, _ = run(capsys, "compare", FIXTURES / "merger_panel1.json")
    assert code == 0
    lines = out.splitlines()
    rows = {line.split()[0]: line.split()[1:] for line in lines[2:5]}
    assert rows["base"] == ["0.5897", "0.0167", "0.0073", "0.0036", "0.0029", "0.0029", "0.0023", "0.0190"]
    assert rows["A"] == ["0.5294", "0.0260", "0.0072", "0.0072", "0.0058", "0.0058", "0.0046", "0.0306"]
    assert rows["B"] == ["0.5461", "0.0232", "0.0075", "0.0060", "0.0048", "0.0048", "0.0039", "0.0270"]
    assert "B: socially desirable, privately desirable, Pareto improvement" in out


def test_compare_json_and_tariffs(capsys):
    code, out, _ = run(capsys, "compare", FIXTURES / "tariff_chain3.json", "--format", "json")
    assert code == 0
    data = json.loads(out)
    uniform, lump = data["scenarios"]
    assert uniform["report"]["P_star"] == pytest.approx(lump["report"]["P_star"], abs=1e-11)
    assert uniform["welfare"]["tw"] == pytest.approx(lump["welfare"]["tw"], abs=1e-11)


def test_centrality(capsys):
    code, out, _ = run(capsys, "centrality", FIXTURES / "six_firm_power_half.json", "--format", "json")
    assert code == 0
    data = json.loads(out)
    assert data["beta"] == 0.5
    assert [r["degree"] for r in data["firms"]] == [3, 0, 0, 0, 1, 2]
    code, out, _ = run(capsys, "centrality", FIXTURES / "six_firm_linear.json", "--beta", "1/2", "--format", "csv")
    assert code == 0 and "bonacich" in out.splitlines()[0]


def test_verify_writes_curves(capsys, tmp_path):
    code, out, _ = run(capsys, "verify", FIXTURES / "diamond_linear.json", "--curves", tmp_path / "curves")
    assert code == 0
    written = sorted(p.name for p in (tmp_path / "curves").iterdir())
    assert written == [f"deviation_{x}.csv" for x in "1234"]
    rows = list(csv.DictReader((tmp_path / "curves" / "deviation_1.csv").open()))
    assert len(rows) == 201 and set(rows[0]) == {"price", "final_price", "profit"}


def test_dwl_sweep(capsys):
    code, out, _ = run(capsys, "dwl-sweep", FIXTURES / "dwl_linear.json", "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 28
    chain10 = next(r for r in rows if r["n"] == "10" and r["kind"] == "chain")
    assert float(chain10["dwl"]) == pytest.approx((1023 / 1024) ** 2 / 2, abs=1e-11)


def test_logit_bounds(capsys):
    code, out, _ = run(capsys, "logit-bounds", FIXTURES / "six_firm_logit.json", "--format", "json")
    data = json.loads(out)
    assert code == 0
    assert data["lower_P"] == 6 and data["P_bound_holds"] and data["price_bounds_hold"]


def test_numbers_are_plain_decimals(capsys):
    _, out, _ = run(capsys, "solve", FIXTURES / "six_firm_logit.json", "--format", "csv")
    for row in list(csv.reader(io.StringIO(out)))[1:]:
        for cell in row[1:]:
            if cell:
                float(cell)
                assert "," not in cell


@pytest.mark.parametrize("data,needle", [
    (linear_model(edges=[["a", "b"], ["a", "b"]]), "duplicate edge a→b"),
    (linear_model(edges=[["a", "z"]]), "unknown firm 'z'"),
    (linear_model(demand={"family": "cubic"}), "unknown demand family"),
    (linear_model(demand={"family": "linear", "a": -1, "b": 1}), "a > 0"),
    ({"edges": []}, "missing 'firms'"),
    (linear_model(firms=[{"name": "a"}, {"name": "a"}], edges=[]), "duplicate firm names"),
])
def test_bad_input_exit_code(capsys, tmp_path, data, needle):
    code, _, err = run(capsys, "solve", write_model(tmp_path, data))
    assert code == 3
    assert needle in err
    assert len(err.strip().splitlines()) == 1


def test_missing_and_malformed_files(capsys, tmp_path):
    assert run(capsys, "solve", tmp_path / "nope.json")[0] == 3
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(capsys, "solve", bad)[0] == 3


def test_solver_failure_exit_code(capsys, tmp_path):
    code, _, err = run(capsys, "solve", write_model(tmp_path, linear_model(c0=1.5)))
    assert code == 2 and "NoGainsFromTrade" in err


def test_exact_needs_closed_form_family(capsys):
    code, _, err = run(capsys, "solve", FIXTURES / "six_firm_logit.json", "--exact")
    assert code == 3 and "--exact" in err


def test_logit_bounds_needs_logit(capsys):
    assert run(capsys, "logit-bounds", FIXTURES / "six_firm_linear.json")[0] == 3


def test_usage_errors(capsys):
    assert run(capsys, "frobnicate")[0] == 3
    assert run(capsys, "solve")[0] == 3
    assert run(capsys, "solve", FIXTURES / "six_firm_linear.json", "--format", "xml")[0] == 3
    assert run(capsys, "--help")[0] == 0


def test_tolerance_environment_variable(capsys, monkeypatch):
    monkeypatch.setenv(cli.TOL_ENV, "1e-6")
    code, out, _ = run(capsys, "solve", FIXTURES / "six_firm_logit.json", "--format", "json")
    assert code == 0
    assert abs(json.loads(out)["residual"]) <= 1e-6 * 6.1
    monkeypatch.setenv(cli.TOL_ENV, "tiny")
    assert run(capsys, "solve", FIXTURES / "six_firm_logit.json")[0] == 3


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "netprice", "solve", str(FIXTURES / "six_firm_linear.json"),
                           "--format", "json"], capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["P_star"] == pytest.approx(13 / 14)


def test_model_file_round_trip(tmp_path):
    m = files.load_model(FIXTURES / "six_firm_power_half.json")
    path = write_model(tmp_path, files.model_to_dict(m))
    again = files.load_model(path)
    assert again.net == m.net and again.demand == m.demand
    assert np.array_equal(again.costs, m.costs)
