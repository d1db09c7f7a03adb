import csv
import io
import json

import jsonschema
import numpy as np
import pytest

from eigenbundle.cli import main, sweep_rows
from eigenbundle.errors import ParseError
from eigenbundle.families import G_MAX
from eigenbundle.marketfile import dumps_market, load_market, parse_market, spec_to_dict
from eigenbundle.report import report_schema

from conftest import DATA

BUNDLED = sorted(DATA.glob("*.json"))
MARKET_SCHEMA = json.loads(
    (DATA.parent / "src" / "eigenbundle" / "schemas" / "market_schema.json").read_text()
)


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv, "--format", "json")
    assert code == 0, err
    report = json.loads(out)
    jsonschema.validate(report, report_schema())
    return report


def write_market(tmp_path, doc, name="m.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


@pytest.mark.parametrize("path", BUNDLED, ids=lambda p: p.name)
def test_bundled_files_round_trip(path):
    spec = load_market(path)
    again = parse_market(dumps_market(spec))
    assert spec_to_dict(again) == spec_to_dict(spec)
    assert json.loads(path.read_text()) == spec_to_dict(spec)
    jsonschema.validate(json.loads(path.read_text()), MARKET_SCHEMA)


def test_analyze_triangle(capsys):
    report = run_json(capsys, "analyze", DATA / "hub_triangle.json")
    assert np.allclose(report["spectral"]["sigma"], [-2, -1, 0], atol=1e-12)
    assert np.allclose(report["spectral"]["lambda"], [1 / 3, 1 / 2, 1], atol=1e-12)
    assert report["equilibrium"]["consumer_surplus"] is None
    assert any("semidefinite" in w for w in report["warnings"])
    code, text, _ = run(capsys, "analyze", DATA / "hub_triangle.json")
    assert code == 0 and "sigma=-2 lambda=0.333333" in text


def test_analyze_independent_has_no_scope(capsys):
    report = run_json(capsys, "analyze", DATA / "independent.json")
    assert report["spectral"]["eigenvalue_variance"] == 0.0
    assert any("no scope for budget-balanced intervention" in n for n in report["notes"])


def test_asymmetric_matrix_rejected(capsys, tmp_path):
    path = write_market(tmp_path, {
        "schema_version": 1, "n": 2, "beta": [1, 1], "cost": [0, 0],
        "d_matrix": [[-1, 0.2], [0.3, -1]],
    })
    code, _, err = run(capsys, "analyze", path)
    assert code == 1
    line = err.strip().splitlines()
    assert len(line) == 1 and line[0].startswith("error ParseError:")
    assert "d_matrix" in err and "(1,2)" in err


def test_malformed_json_reports_position(tmp_path):
    with pytest.raises(ParseError, match="line 2, column"):
        parse_market('{"n": 2,\n "beta": [1, }')


@pytest.mark.parametrize(
    "doc, field",
    [
        ({"schema_version": 1, "n": 2, "cost": [0, 0], "d_matrix": [[-1, 0], [0, -1]]}, "beta"),
        ({"schema_version": 1, "n": 2, "beta": [1], "cost": [0, 0], "d_matrix": [[-1, 0], [0, -1]]}, "beta"),
        ({"schema_version": 2, "n": 1, "beta": [1], "cost": [0], "d_matrix": [[-1]]}, "schema_version"),
        ({"schema_version": 1, "n": 2, "beta": [1, 1], "cost": [0, 0], "d_matrix": [[-1, 0], [0]]}, "d_matrix"),
    ],
)
def test_parse_errors_name_the_field(doc, field):
    with pytest.raises(ParseError) as info:
        parse_market(json.dumps(doc))
    assert info.value.field == field


def test_global_opt_calibrated_market(capsys):
    report = run_json(capsys, "global-opt", DATA / "g_triangle_0.5_calibrated.json")
    gp = report["global_plan"]
    assert gp["z"] == pytest.approx(0.59, abs=0.01)
    assert gp["revenue_eigen"][0] == pytest.approx(6.3, abs=0.1)
    assert abs(gp["budget_residual"]) < 1e-8


def test_global_opt_independent_is_status_quo(capsys):
    report = run_json(capsys, "global-opt", DATA / "independent.json")
    assert report["global_plan"]["tau_product"] == [0.0, 0.0, 0.0]


def test_global_opt_semidefinite_is_model_error(capsys):
    code, _, err = run(capsys, "global-opt", DATA / "hub_triangle.json")
    assert code == 1 and err.startswith("error NotNegativeDefinite:")


def test_small_opt_threshold_pattern(capsys):
    report = run_json(capsys, "small-opt", DATA / "g_triangle_0.5.json", "-a", 1000)
    sp = report["small_plan"]
    lam = report["spectral"]["lambda"]
    for tau, l, pattern, excluded in zip(sp["tau_eigen"], lam, sp["pattern"], [1, 2, 3]):
        if excluded in sp["excluded"]:
            assert pattern == "none"
        else:
            assert pattern == ("tax" if l < sp["z"] else "subsidy")
    assert sp["excluded"] == [2]


def test_simulate_zero_taxes(capsys, tmp_path):
    tau = tmp_path / "tau.json"
    tau.write_text("[0, 0, 0]")
    report = run_json(capsys, "simulate", DATA / "g_triangle_0.5.json", "--tau-file", tau, "--samples", 500)
    sim = report["simulation"]
    assert sim["mean_dC"] == sim["var_dC"] == sim["mean_revenue"] == sim["objective"] == 0.0


def test_simulate_is_byte_identical(capsys, tmp_path):
    argv = ["simulate", DATA / "g_triangle_0.5.json", "--plan", "small", "--samples", 20000, "--seed", 42]
    outs = [run(capsys, *argv)[1] for _ in range(2)]
    assert outs[0] == outs[1]
    files = []
    for k in range(2):
        out = tmp_path / f"r{k}.json"
        assert run(capsys, *argv, "--format", "json", "--out", out)[0] == 0
        files.append(out.read_bytes())
    assert files[0] == files[1]


def test_simulate_small_plan_budget(capsys):
    report = run_json(
        capsys, "simulate", DATA / "g_triangle_0.5_calibrated.json", "--plan", "small",
        "-a", 1000, "--samples", 100000, "--seed", 1,
    )
    sim = report["simulation"]
    assert abs(sim["mean_revenue"]) < 3 * sim["se_mean_revenue"]


def test_simulate_usage_errors(capsys):
    code, _, err = run(capsys, "simulate", DATA / "g_triangle_0.5.json")
    assert code == 2 and err.startswith("error UsageError:")
    with pytest.raises(SystemExit) as info:
        main(["simulate", str(DATA / "g_triangle_0.5.json"), "--plan", "small", "--seed", "-3"])
    assert info.value.code == 2


def test_missing_file_is_usage_error(capsys, tmp_path):
    code, _, err = run(capsys, "analyze", tmp_path / "absent.json")
    assert code == 2 and err.startswith("error IOError:")


def test_sweep_rows_match_closed_forms(capsys, tmp_path):
    out = tmp_path / "sweep.csv"
    code, _, _ = run(capsys, "sweep", "--family", "three-product", "--param", "g",
                     "--from", 0, "--to", 0.7, "--steps", 8, "--out", out)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert [float(r["g"]) for r in rows] == [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7]
    for r in rows:
        g, var, z, lev = (float(r[k]) for k in ("g", "var_sigma", "z_small", "leverage"))
        assert var == pytest.approx(4 * g**2 / 3, abs=1e-12)
        assert z == pytest.approx(3 / (6 + 2 * g**2), abs=1e-12)
        assert lev == pytest.approx(3 * var / (4 + var), abs=1e-12)
    assert float(rows[0]["z_small"]) == 0.5 and float(rows[0]["leverage"]) == 0.0
    assert float(rows[5]["z_small"]) == pytest.approx(3 / 6.5, abs=1e-12)


def test_sweep_global_columns_and_range():
    rows = sweep_rows([0.0, 0.5], beta=[10.0, 10.0, 15.0], cost=[0.0, 0.0, 0.0])
    assert rows[0]["z_global"] == 0.5 and rows[0]["dC_global"] == pytest.approx(0.0, abs=1e-12)
    assert rows[1]["z_global"] == pytest.approx(0.4)


def test_sweep_boundary_is_range_error_in_global_mode(capsys):
    code, _, err = run(capsys, "sweep", "--from", 0.5, "--to", G_MAX, "--steps", 2, "--beta", "10,10,15")
    assert code == 1 and err.startswith("error RangeError:")


@pytest.mark.parametrize("sign, off", [("complements", -0.5), ("substitutes", 0.5)])
def test_example_g_triangle_sign(capsys, sign, off):
    code, out, _ = run(capsys, "example", "--name", "g-triangle", "--g", 0.5, "--sign", sign)
    d = np.array(json.loads(out)["d_matrix"])
    assert code == 0 and d[0, 2] == d[1, 2] == off and d[0, 1] == 0.0


def test_example_triangle(capsys):
    code, out, _ = run(capsys, "example", "--name", "triangle-3.2")
    d = np.array(json.loads(out)["d_matrix"])
    assert d[0, 2] == d[1, 2] == pytest.approx(-1 / np.sqrt(2), abs=1e-15)


def test_example_rejects_large_g(capsys):
    code, _, err = run(capsys, "example", "--name", "g-triangle", "--g", 0.9, "--strict")
    assert code == 1 and err.startswith("error RangeError:")
