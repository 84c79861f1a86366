"""Attribution report container and its JSON / CSV / SVG renderings."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np


@dataclass(frozen=True)
class AttributionReport:
    attributions: np.ndarray
    v_full: float
    v_empty: float
    method: str
    completeness_residual: float
    feature_names: tuple[str, ...]
    stderr: np.ndarray | None = None
    permutations: int | None = None
    seed: int | None = None

    @property
    def total(self) -> float:
        return self.v_full - self.v_empty

    def method_dict(self) -> dict:
        out = {"name": self.method}
        if self.method == "sampled":
            out["permutations"] = self.permutations
            out["seed"] = self.seed
        return out

    def to_dict(self) -> dict:
        return {
            "features": list(self.feature_names),
            "attributions": [float(a) for a in self.attributions],
            "v_full": float(self.v_full),
            "v_empty": float(self.v_empty),
            "method": self.method_dict(),
            "stderr": None if self.stderr is None else [float(s) for s in self.stderr],
            "completeness_residual": float(self.completeness_residual),
        }

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["feature", "attribution", "stderr"])
        for k, name in enumerate(self.feature_names):
            se = "" if self.stderr is None else repr(float(self.stderr[k]))
            writer.writerow([name, repr(float(self.attributions[k])), se])
        return buf.getvalue()

    def to_svg(self, title: str | None = None) -> str:
        return bar_chart_svg(self.feature_names, self.attributions, title=title)


def bar_chart_svg(labels, values, title=None, width=640, bar_height=22) -> str:
    """Horizontal bar chart, one bar per feature, zero line marked."""
    values = np.asarray(values, dtype=float)
    label_w, pad, top = 150, 12, 36 if title else 12
    plot_w = width - label_w - 2 * pad - 60
    lo, hi = min(0.0, float(values.min(initial=0.0))), max(0.0, float(values.max(initial=0.0)))
    span = (hi - lo) or 1.0
    x0 = label_w + pad + plot_w * (-lo / span)
    height = top + bar_height * len(values) + 2 * pad
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'font-family="sans-serif" font-size="12">'
    ]
    if title:
        parts.append(f'<text x="{width / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>')
    for k, (label, v) in enumerate(zip(labels, values)):
        y = top + k * bar_height
        w = plot_w * abs(v) / span
        x = x0 if v >= 0 else x0 - w
        parts.append(
            f'<text x="{label_w}" y="{y + bar_height * 0.65:.1f}" text-anchor="end">{escape(str(label))}</text>'
        )
        parts.append(
            f'<rect x="{x:.2f}" y="{y + 3}" width="{w:.2f}" height="{bar_height - 6}" '
            f'fill="{"#4c72b0" if v >= 0 else "#c44e52"}"/>'
        )
        tx = x0 + w + 4 if v >= 0 else x0 + 4
        parts.append(f'<text x="{tx:.2f}" y="{y + bar_height * 0.65:.1f}">{v:.4g}</text>')
    parts.append(
        f'<line x1="{x0:.2f}" y1="{top}" x2="{x0:.2f}" y2="{top + bar_height * len(values)}" stroke="black"/>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
