import json
import math

import numpy as np
import pytest

from riskshap import cli
from riskshap.axioms import AxiomCheck
from riskshap.data_io import load_csv
from riskshap.fixtures import write_demo_bundle
from riskshap.models import BSMCall, evaluate_model, load_model


@pytest.fixture(scope="module")
def bundle(tmp_path_factory):
    return write_demo_bundle(tmp_path_factory.mktemp("bundle"))


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


class TestAttribute:
    def test_linear_demo_completeness(self, capsys, bundle):
        code, out, _ = run(capsys, "attribute", "--model", bundle["linear_model"], "--input", bundle["linear_returns"],
                           "--risk", "cvar", "--alpha", "0.05")
        assert code == 0
        rep = json.loads(out)
        assert rep["completeness_residual"] <= 1e-12
        assert rep["features"] == ["asset_a", "asset_b"]
        assert rep["method"] == {"name": "exact"}
        assert rep["stderr"] is None
        assert set(rep) == {"features", "attributions", "v_full", "v_empty", "method", "stderr", "completeness_residual"}

    def test_sampled_is_byte_identical(self, capsys, bundle):
        argv = ["attribute", "--model", bundle["linear_model"], "--input", bundle["linear_returns"],
                "--method", "sampled", "--permutations", "200", "--seed", "7", "--risk", "cvar"]
        first = run(capsys, *argv)
        second = run(capsys, *argv, "--threads", "3")
        assert first[0] == 0
        assert first[1] == second[1]

    def test_gaussian_fixture_within_two_percent(self, capsys, bundle):
        code, out, _ = run(capsys, "attribute", "--model", bundle["linear_model"], "--input", bundle["gaussian_returns"],
                           "--risk", "std", "--method", "sampled", "--permutations", "10000", "--seed", "1")
        assert code == 0
        attributions = json.loads(out)["attributions"]
        assert attributions[0] == pytest.approx(2.0, rel=0.02)
        assert attributions[1] == pytest.approx(3.0, rel=0.02)

    def test_csv_and_svg(self, capsys, bundle, tmp_path):
        svg = tmp_path / "chart.svg"
        code, out, _ = run(capsys, "attribute", "--model", bundle["linear_model"], "--input", bundle["linear_returns"],
                           "--format", "csv", "--svg", svg)
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "feature,attribution,stderr"
        assert lines[1].startswith("asset_a,")
        text = svg.read_text()
        assert text.startswith("<svg") and "asset_b" in text

    def test_current_and_literal_baseline(self, capsys, bundle):
        base = ["attribute", "--model", bundle["linear_model"], "--input", bundle["linear_returns"], "--risk", "std"]
        code_a, out_a, _ = run(capsys, *base, "--baseline", "current")
        code_b, out_b, _ = run(capsys, *base, "--baseline", "0.001,-0.002")
        assert code_a == code_b == 0
        # std is shift invariant in the baseline for a linear model
        np.testing.assert_allclose(json.loads(out_a)["attributions"], json.loads(out_b)["attributions"], atol=1e-15)

    def test_residuals_add_feature(self, capsys, bundle, tmp_path):
        X = load_csv(bundle["linear_returns"])
        y = X.values @ [1.0, 1.0] + 0.001 * np.random.default_rng(0).normal(size=X.n_rows)
        ypath = tmp_path / "y.csv"
        ypath.write_text("y\n" + "\n".join(repr(float(v)) for v in y) + "\n")
        code, out, _ = run(capsys, "attribute", "--model", bundle["linear_model"], "--input", bundle["linear_returns"],
                           "--residuals", ypath, "--risk", "std")
        assert code == 0
        rep = json.loads(out)
        assert rep["features"] == ["asset_a", "asset_b", "idiosyncratic"]
        # v(M) is the risk of y itself
        assert rep["v_full"] == pytest.approx(float(np.std(y)), rel=1e-12)

    def test_config_file(self, capsys, bundle, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            f"# attribution defaults\nmodel = {bundle['linear_model']}\ninput = \"{bundle['linear_returns']}\"\n"
            "risk = cvar\nalpha = 0.1\n"
        )
        code, out, _ = run(capsys, "attribute", "--config", cfg)
        code2, out2, _ = run(capsys, "attribute", "--model", bundle["linear_model"], "--input",
                             bundle["linear_returns"], "--risk", "cvar", "--alpha", "0.1")
        assert code == code2 == 0
        assert out == out2

    def test_flag_overrides_config(self, capsys, bundle, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(f"model = {bundle['linear_model']}\ninput = {bundle['linear_returns']}\nrisk = cvar\n")
        _, out, _ = run(capsys, "attribute", "--config", cfg, "--risk", "std")
        _, ref, _ = run(capsys, "attribute", "--model", bundle["linear_model"], "--input", bundle["linear_returns"])
        assert out == ref


class TestExitCodes:
    def test_missing_model_file(self, capsys, bundle):
        code, out, err = run(capsys, "attribute", "--model", "/nonexistent.json", "--input", bundle["linear_returns"])
        assert code == 1
        assert out == ""
        assert "error" in err

    def test_bad_csv(self, capsys, bundle, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("a,b\n1,\n")
        code, _, err = run(capsys, "attribute", "--model", bundle["linear_model"], "--input", bad)
        assert code == 1
        assert "row 2, col 2" in err

    def test_missing_required_flag(self, capsys):
        code, _, err = run(capsys, "attribute")
        assert code == 1
        assert "--model" in err

    def test_guard(self, capsys, bundle):
        code, _, err = run(capsys, "attribute", "--model", bundle["linear_model"], "--input", bundle["linear_returns"],
                           "--max-exact-features", "1")
        assert code == 2
        assert "shapley_sampled" in err or "sampled" in err

    def test_width_mismatch(self, capsys, bundle, tmp_path):
        three = tmp_path / "three.csv"
        three.write_text("a,b,c\n1,2,3\n")
        code, _, _ = run(capsys, "attribute", "--model", bundle["linear_model"], "--input", three)
        assert code == 1


class TestBam:
    def test_linear(self, capsys, bundle):
        code, out, _ = run(capsys, "bam", "--model", bundle["linear_model"], "--explicand", "1,2")
        assert code == 0
        assert json.loads(out)["attributions"] == [1.0, 2.0]

    def test_bsm_sums_to_price_difference(self, capsys, tmp_path):
        model = BSMCall(800.0, 30 / 365)
        path = tmp_path / "bsm.json"
        path.write_text(json.dumps({"variant": "bsm_call", "strike": 800.0, "maturity": 30 / 365}))
        x_bar = [math.log(850.0), math.log(0.5), math.log(0.02)]
        x_ref = [math.log(890.0), math.log(0.4), math.log(0.021)]
        code, out, _ = run(capsys, "bam", "--model", path, "--explicand", ",".join(map(repr, x_bar)),
                           "--baseline", ",".join(map(repr, x_ref)))
        assert code == 0
        rep = json.loads(out)
        assert rep["features"] == list(BSMCall.feature_names)
        diff = evaluate_model(model, x_bar) - evaluate_model(model, x_ref)
        assert sum(rep["attributions"]) == pytest.approx(diff, abs=1e-9)

    def test_explicand_equals_baseline(self, capsys, bundle):
        code, out, _ = run(capsys, "bam", "--model", bundle["linear_model"], "--explicand", "0.3,0.4",
                           "--baseline", "0.3,0.4")
        assert code == 0
        assert json.loads(out)["attributions"] == [0.0, 0.0]


class TestOptimize:
    def test_json_shape(self, capsys, bundle):
        code, out, _ = run(capsys, "optimize-cvar", "--input", bundle["linear_returns"], "--alpha", "0.05")
        assert code == 0
        rep = json.loads(out)
        assert sum(rep["weights"]) == pytest.approx(1.0)
        assert len(rep["cvar_before"]) == 2
        assert rep["cvar_after"] <= min(rep["cvar_before"]) + 1e-12
        assert rep["cvar_after"] == pytest.approx(rep["lp_objective"], abs=1e-8)


class TestCheckAxioms:
    def test_verdicts_pass(self, capsys, bundle):
        code, out, _ = run(capsys, "check-axioms", "--model", bundle["linear_model"], "--input",
                           bundle["linear_returns"], "--risk", "cvar")
        assert code == 0
        verdicts = json.loads(out)
        axioms = {v["axiom"] for v in verdicts}
        assert {"completeness", "dummy", "symmetry", "subadditivity_bound", "individual_monotonicity"} <= axioms
        assert all(v["assertion_held"] is not False for v in verdicts)

    def test_failure_exit_three(self, capsys, bundle, monkeypatch):
        failing = [AxiomCheck("completeness", True, False, 1.0, witness=0, note="forced")]
        monkeypatch.setattr(cli.axioms, "run_all_checks", lambda game, report=None: failing)
        code, out, err = run(capsys, "check-axioms", "--model", bundle["linear_model"], "--input",
                             bundle["linear_returns"])
        assert code == 3
        assert json.loads(out)[0]["assertion_held"] is False
        assert "completeness" in err


class TestBsmPipeline:
    def test_scenario_then_attribute(self, capsys, bundle, tmp_path):
        sc, bl, bm = tmp_path / "sc.csv", tmp_path / "bl.csv", tmp_path / "bm.json"
        code, out, _ = run(capsys, "bsm-scenario", "--input", bundle["market_year"], "--date-column", "date",
                           "--strike", "800", "--maturity-days", "30",
                           "--out-scenarios", sc, "--out-baseline", bl, "--out-model", bm)
        assert code == 0
        summary = json.loads(out)
        assert summary["rows"] == 252
        assert load_model(bm) == BSMCall(800.0, 30 / 365)
        code, out, _ = run(capsys, "attribute", "--model", bm, "--input", sc, "--date-column", "date",
                           "--baseline", bl, "--risk", "std")
        assert code == 0
        rep = json.loads(out)
        a = rep["attributions"]
        assert a[2] < a[1] < a[0]
        assert abs(sum(a) - (rep["v_full"] - rep["v_empty"])) <= 1e-9 * max(1.0, abs(rep["v_full"]))


def test_incompat_text(capsys):
    code, out, _ = run(capsys, "incompat")
    assert code == 0
    assert "0.585786437627" in out


def test_module_entry_point():
    import subprocess
    import sys

    res = subprocess.run([sys.executable, "-m", "riskshap", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    assert "attribute" in res.stdout
