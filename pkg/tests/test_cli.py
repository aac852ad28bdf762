import json
from pathlib import Path

import numpy as np
import pytest

from ordered_dp.cli import main
from ordered_dp.io import read_csv

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def run(command, config, out, *extra):
    return main([command, "--config", str(config), "--out", str(out), *extra])


def write_config(tmp_path, data, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return path


def test_solve_firm_exit_defaults(tmp_path):
    assert run("solve", CONFIGS / "firm_exit.json", tmp_path) == 0
    header, rows = read_csv(tmp_path / "value.csv")
    assert header == ["state", "x", "v_star"] and len(rows) == 400
    for name in ("policy.csv", "trace.csv"):
        assert (tmp_path / name).exists()


@pytest.mark.parametrize("name", ["mdp_small", "quantile_3state", "risk_sensitive_small",
                                  "nonlinear_discount_small"])
def test_solve_bundled_configs(tmp_path, name):
    assert run("solve", CONFIGS / f"{name}.json", tmp_path) == 0
    assert read_csv(tmp_path / "policy.csv")[0] == ["state", "action"]


def test_solve_nonconvergence_exit_code(tmp_path):
    assert run("solve", CONFIGS / "quantile_3state.json", tmp_path, "--max-iter", "1") == 2
    assert len(read_csv(tmp_path / "trace.csv")[1]) == 1


def test_malformed_parameter_names_field(tmp_path, capsys):
    cfg = json.loads((CONFIGS / "quantile_3state.json").read_text())
    cfg["params"]["tau"] = 1.5
    assert run("solve", write_config(tmp_path, cfg), tmp_path / "o") == 1
    assert "tau" in capsys.readouterr().err


def test_invalid_json_reports_line(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{"kind": "mdp",\n  "params": }')
    assert run("solve", path, tmp_path / "o") == 1
    assert "bad.json:2:" in capsys.readouterr().err


@pytest.mark.parametrize("patch, field", [
    ({"extra": 1}, "extra"),
    ({"algorithm": "sarsa"}, "algorithm"),
    ({"study": {"theta_num": 5}}, "theta_num"),
    ({"validate": {"trails": 5}}, "trails"),
    ({"tol": "small"}, "tol"),
])
def test_strict_config_fields(tmp_path, capsys, patch, field):
    cfg = {**json.loads((CONFIGS / "mdp_small.json").read_text()), **patch}
    assert run("solve", write_config(tmp_path, cfg), tmp_path / "o") == 1
    assert field in capsys.readouterr().err


def test_unknown_param_rejected(tmp_path, capsys):
    cfg = json.loads((CONFIGS / "mdp_small.json").read_text())
    cfg["params"]["gamma"] = 0.9
    assert run("solve", write_config(tmp_path, cfg), tmp_path / "o") == 1
    assert "gamma" in capsys.readouterr().err


def test_missing_config_file(tmp_path):
    assert run("solve", tmp_path / "nope.json", tmp_path) == 1


def test_usage_error_exit_code():
    assert main(["frobnicate"]) == 1


def test_validate_quantile_fixture(tmp_path):
    assert run("validate", CONFIGS / "quantile_3state.json", tmp_path) == 0
    rep = json.loads((tmp_path / "validation_report.json").read_text())
    opt = rep["optimality"]
    assert opt["b1"] and opt["b2"] and opt["b3"]
    assert all(p["passed"] and p["seed"] == 0 for p in rep["properties"])


def test_validate_planted_failure_writes_witness(tmp_path):
    assert run("validate", CONFIGS / "broken_monotone.json", tmp_path) == 3
    witnesses = json.loads((tmp_path / "witnesses.json").read_text())
    assert any(w["name"] == "discount order preserving" and w["witness"] for w in witnesses)


def test_validate_data_valuation_reports_drift(tmp_path):
    assert run("validate", CONFIGS / "data_valuation.json", tmp_path) == 0
    rep = json.loads((tmp_path / "drift.json").read_text())
    assert rep["passed"] and rep["rho"] < 1
    assert rep["optimality_checks"].startswith("skipped")


def test_validate_enumeration_guard(tmp_path, capsys):
    n = 25
    cfg = {"kind": "mdp", "params": {"reward": np.ones((n, 2)).tolist(),
                                     "transitions": np.full((n, 2, n), 1 / n).tolist(),
                                     "beta": 0.9}}
    assert run("validate", write_config(tmp_path, cfg), tmp_path / "o") == 1
    assert "property_only" in capsys.readouterr().err
    cfg["validate"] = {"property_only": True, "trials": 50}
    assert run("validate", write_config(tmp_path, cfg), tmp_path / "o") == 0


def test_data_valuation_command(tmp_path):
    assert run("data-valuation", CONFIGS / "data_valuation.json", tmp_path) == 0
    header, rows = read_csv(tmp_path / "data_valuation.csv")
    assert header == ["b", "s", "v_star"] and len(rows) == 6


def test_data_valuation_unstable_exit_code(tmp_path):
    cfg = {"kind": "data_valuation",
           "params": {"b_grid": [1.2], "s_grid": [0.0], "Q": [[1.0]], "P": [[1.0]],
                      "profit": [1.0], "alpha_drift": 0.5, "lambda_drift": 0.5}}
    assert run("data-valuation", write_config(tmp_path, cfg), tmp_path / "o") == 3


def test_compare_algos(tmp_path):
    assert run("compare-algos", CONFIGS / "risk_sensitive_small.json", tmp_path,
               "--m", "1,10") == 0
    _, rows = read_csv(tmp_path / "agreement.csv")
    assert [r[0] for r in rows] == ["vfi", "hpi", "opi", "opi"]
    assert all(float(r[4]) <= 1e-6 for r in rows)
    header, _ = read_csv(tmp_path / "timings.csv")
    assert header == ["algorithm", "m", "seconds", "iterations"]


def _small_study(tmp_path):
    return write_config(tmp_path, {
        "kind": "firm_exit", "params": {"n": 60},
        "m": [1, 10], "study": {"theta_num": 10, "repeats": 1},
    }, "study.json")


def test_firm_exit_study_outputs(tmp_path):
    cfg = _small_study(tmp_path)
    assert run("firm-exit-study", cfg, tmp_path / "a") == 0
    out = tmp_path / "a"
    vs = np.loadtxt(out / "vs.csv", delimiter=",", skiprows=1)
    assert np.max(np.abs(vs[:, 1] - np.maximum(vs[:, 3], vs[:, 2]))) <= 1e-9
    sweep = np.loadtxt(out / "threshold_sweep.csv", delimiter=",", skiprows=1)
    assert len(sweep) == 10 and sweep[0, 0] == -2.0 and sweep[-1, 0] == -0.1
    assert np.all(np.diff(sweep[:, 1]) <= 0)
    header, rows = read_csv(out / "timings.csv")
    for algo in ("vfi", "hpi"):
        sel = [r for r in rows if r[0] == algo]
        assert len(sel) == 2 and len({(r[2], r[3]) for r in sel}) == 1
    header, _ = read_csv(out / "algo_iterates.csv")
    assert header[:2] == ["x", "v0"] and header[-1] == "v_star" and "opi_3" in header
    pvs = np.loadtxt(out / "policy_vs_stationary.csv", delimiter=",", skiprows=1)
    assert pvs[:, 2].sum() == pytest.approx(150.0)
    assert (out / "plot_firm_exit.gp").exists()

    # reruns are byte-identical apart from wall-clock timings
    assert run("firm-exit-study", cfg, tmp_path / "b") == 0
    for name in ("vs.csv", "threshold_sweep.csv", "policy_vs_stationary.csv",
                 "algo_iterates.csv"):
        assert (out / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


@pytest.mark.parametrize("name", ["mdp_small", "quantile_3state", "risk_sensitive_small",
                                  "nonlinear_discount_small", "data_valuation"])
def test_solve_reruns_byte_identical(tmp_path, name):
    assert run("solve", CONFIGS / f"{name}.json", tmp_path / "a", "--seed", "5") == 0
    assert run("solve", CONFIGS / f"{name}.json", tmp_path / "b", "--seed", "5") == 0
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert files
    for f in files:
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_study_requires_firm_exit_kind(tmp_path):
    assert run("firm-exit-study", CONFIGS / "mdp_small.json", tmp_path) == 1
