import csv
import io
import json
import xml.etree.ElementTree as ET

import numpy as np

from riskshap.report import AttributionReport, bar_chart_svg
from riskshap.risk_measures import RiskKind, RiskMeasureSpec
from riskshap.shapley import GaussianRiskGame, shapley_exact, shapley_sampled

STD = RiskMeasureSpec(RiskKind.STD)


def exact_report():
    return shapley_exact(GaussianRiskGame.from_std_corr([3.0, 4.0], 0.0, STD, feature_names=("a<1>", "b")))


class TestSerialization:
    def test_json_round_trip(self):
        rep = exact_report()
        data = json.loads(rep.to_json())
        assert data["attributions"] == [float(a) for a in rep.attributions]
        assert data["v_full"] == 5.0 and data["v_empty"] == 0.0
        assert data["features"] == ["a<1>", "b"]

    def test_sampled_metadata(self):
        rep = shapley_sampled(GaussianRiskGame.from_std_corr([3.0, 4.0], 0.0, STD), permutations=10, seed=4)
        data = rep.to_dict()
        assert data["method"] == {"name": "sampled", "permutations": 10, "seed": 4}
        assert len(data["stderr"]) == 2

    def test_csv_exact_floats(self):
        rep = shapley_sampled(GaussianRiskGame.from_std_corr([1.0, 2.0], 0.3, STD), permutations=30, seed=0)
        rows = list(csv.DictReader(io.StringIO(rep.to_csv())))
        np.testing.assert_array_equal([float(r["attribution"]) for r in rows], rep.attributions)
        np.testing.assert_array_equal([float(r["stderr"]) for r in rows], rep.stderr)

    def test_total(self):
        rep = exact_report()
        assert rep.total == rep.v_full - rep.v_empty


class TestSvg:
    def test_well_formed_and_escaped(self):
        root = ET.fromstring(exact_report().to_svg("risk <std>"))
        texts = [t.text for t in root.iter("{http://www.w3.org/2000/svg}text")]
        assert "risk <std>" in texts
        assert "a<1>" in texts
        assert len(list(root.iter("{http://www.w3.org/2000/svg}rect"))) == 2

    def test_negative_bars(self):
        svg = bar_chart_svg(["x", "y"], [-1.0, 2.0])
        root = ET.fromstring(svg)
        rects = list(root.iter("{http://www.w3.org/2000/svg}rect"))
        assert rects[0].get("fill") != rects[1].get("fill")

    def test_all_zero(self):
        ET.fromstring(bar_chart_svg(["x"], [0.0]))
