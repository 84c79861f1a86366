"""Scenario matrices: CSV ingestion, log returns, residual augmentation and
option-pricing scenario construction.

Rows are aligned purely by position. Date columns are kept as string labels
and never interpreted.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from riskshap.errors import CsvFormatError
from riskshap.models import BSMCall, evaluate_model

RESIDUAL_COLUMN = "idiosyncratic"


@dataclass(frozen=True)
class ScenarioMatrix:
    """``n`` scenarios by ``m`` named features, all finite."""

    columns: tuple[str, ...]
    values: np.ndarray
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        columns = tuple(str(c) for c in self.columns)
        values = np.array(self.values, dtype=float)
        if values.ndim != 2:
            raise ValueError(f"values must be 2-D, got shape {values.shape}")
        if values.shape[0] < 1:
            raise ValueError("a scenario matrix needs at least one row")
        if values.shape[1] != len(columns):
            raise ValueError(f"{len(columns)} column names for {values.shape[1]} columns")
        if len(set(columns)) != len(columns):
            raise ValueError(f"duplicate column names in {columns}")
        if not np.all(np.isfinite(values)):
            r, c = np.argwhere(~np.isfinite(values))[0]
            raise ValueError(f"non-finite value at row {r}, column {columns[c]!r}")
        values.setflags(write=False)
        object.__setattr__(self, "columns", columns)
        object.__setattr__(self, "values", values)
        if self.labels is not None:
            labels = tuple(str(x) for x in self.labels)
            if len(labels) != values.shape[0]:
                raise ValueError(f"{len(labels)} row labels for {values.shape[0]} rows")
            object.__setattr__(self, "labels", labels)

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]

    def column(self, name: str) -> np.ndarray:
        try:
            return self.values[:, self.columns.index(name)]
        except ValueError:
            raise KeyError(f"no column {name!r}; have {list(self.columns)}") from None

    def with_column(self, name: str, data) -> ScenarioMatrix:
        data = np.asarray(data, dtype=float).reshape(-1, 1)
        return ScenarioMatrix(self.columns + (name,), np.hstack([self.values, data]), self.labels)


def _parse_float(text: str, path, row: int, col: int) -> float:
    cell = text.strip()
    if cell == "":
        raise CsvFormatError("blank cell", path, row, col)
    try:
        value = float(cell)
    except ValueError:
        raise CsvFormatError(f"non-numeric cell {cell!r}", path, row, col) from None
    if not math.isfinite(value):
        raise CsvFormatError(f"non-finite cell {cell!r}", path, row, col)
    return value


def load_csv(path, date_column: str | None = None, transform: str = "none") -> ScenarioMatrix:
    """Read a header-first CSV of numeric columns.

    Parameters
    ----------
    path : path-like
    date_column : str, optional
        Column kept as row labels instead of data.
    transform : {"none", "log_return"}
        ``log_return`` maps each price column ``p`` to ``log(p[t+1] / p[t])``;
        the result has one row fewer and keeps the later row's label.

    Raises
    ------
    CsvFormatError
        Ragged rows, blank or non-numeric cells, or nonpositive prices under
        ``log_return``, with 1-based file row and column.
    """
    if transform not in ("none", "log_return"):
        raise ValueError(f"unknown transform {transform!r}")
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8-sig") as fh:
            records = list(csv.reader(fh))
    except UnicodeDecodeError as exc:
        raise CsvFormatError(f"not UTF-8: {exc.reason}", path) from exc
    records = [(k + 1, rec) for k, rec in enumerate(records) if rec]
    if not records:
        raise CsvFormatError("empty file: header row required", path)
    _, header = records[0]
    header = [h.strip() for h in header]
    if date_column is not None and date_column not in header:
        raise CsvFormatError(f"date column {date_column!r} not in header {header}", path, 1)
    data_cols = [k for k, h in enumerate(header) if h != date_column]
    if not data_cols:
        raise CsvFormatError("no numeric columns", path, 1)
    date_idx = header.index(date_column) if date_column is not None else None

    rows, labels = [], []
    for line, rec in records[1:]:
        if len(rec) != len(header):
            raise CsvFormatError(f"expected {len(header)} fields, found {len(rec)}", path, line)
        rows.append([_parse_float(rec[k], path, line, k + 1) for k in data_cols])
        if date_idx is not None:
            labels.append(rec[date_idx].strip())
    if not rows:
        raise CsvFormatError("no data rows", path)
    values = np.array(rows, dtype=float)
    columns = tuple(header[k] for k in data_cols)
    row_labels = tuple(labels) if date_idx is not None else None

    if transform == "log_return":
        bad = np.argwhere(values <= 0)
        if bad.size:
            r, c = bad[0]
            raise CsvFormatError(
                f"nonpositive price {values[r, c]!r} under log_return", path, records[1 + r][0], data_cols[c] + 1
            )
        if values.shape[0] < 2:
            raise CsvFormatError("log_return needs at least two price rows", path)
        values = np.log(values[1:] / values[:-1])
        if row_labels is not None:
            row_labels = row_labels[1:]
    return ScenarioMatrix(columns, values, row_labels)


def save_csv(matrix: ScenarioMatrix, path, label_column: str = "date") -> None:
    """Write ``matrix`` as CSV using shortest round-trip float text."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        head = list(matrix.columns)
        if matrix.labels is not None:
            head = [label_column] + head
        writer.writerow(head)
        for k, row in enumerate(matrix.values):
            cells = [repr(float(v)) for v in row]
            if matrix.labels is not None:
                cells = [matrix.labels[k]] + cells
            writer.writerow(cells)


def load_vector(path, column: str | None = None, date_column: str | None = None) -> np.ndarray:
    """Load one numeric column from a CSV: ``column``, or the only data column."""
    matrix = load_csv(path, date_column=date_column)
    if column is not None:
        return matrix.column(column).copy()
    if matrix.n_features != 1:
        raise CsvFormatError(f"expected a single data column, found {list(matrix.columns)}", path, 1)
    return matrix.values[:, 0].copy()


def compute_residuals(model, X: ScenarioMatrix, y) -> ScenarioMatrix:
    """Append the residual ``y - f(x)`` as an extra feature column.

    The residual's baseline is 0 by convention (see :func:`augment_baseline`).
    """
    y = np.asarray(y, dtype=float).ravel()
    if y.size != X.n_rows:
        raise ValueError(f"{y.size} targets for {X.n_rows} scenarios")
    if not np.all(np.isfinite(y)):
        raise ValueError("targets have non-finite entries")
    if RESIDUAL_COLUMN in X.columns:
        raise ValueError(f"column {RESIDUAL_COLUMN!r} already present")
    fitted = evaluate_model(model, X.values)
    return X.with_column(RESIDUAL_COLUMN, y - fitted)


def augment_baseline(baseline) -> np.ndarray:
    return np.append(np.asarray(baseline, dtype=float), 0.0)


@dataclass(frozen=True)
class BsmScenarioSet:
    scenarios: ScenarioMatrix
    baseline: np.ndarray
    model: BSMCall


def build_bsm_scenarios(prices, vols, rates, strike: float, maturity: float, labels=None) -> BsmScenarioSet:
    """Next-day scenarios for a call struck at ``strike``.

    From aligned daily series of length ``N``, scenario ``i`` (``i = 0..N-2``)
    is ``(log(S_T * S[i+1] / S[i]), log vol[i+1], log rate[i+1])`` where
    ``S_T`` is the last price. The baseline is today's market,
    ``(log S_T, log vol_T, log rate_T)``. Vols and rates are annualized
    decimals.
    """
    S = np.asarray(prices, dtype=float).ravel()
    v = np.asarray(vols, dtype=float).ravel()
    r = np.asarray(rates, dtype=float).ravel()
    if not (S.size == v.size == r.size):
        raise ValueError(f"series lengths differ: {S.size}, {v.size}, {r.size}")
    if S.size < 2:
        raise ValueError("need at least two observations")
    for name, arr in (("prices", S), ("vols", v), ("rates", r)):
        if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
            raise ValueError(f"{name} must be finite and positive")
    model = BSMCall(float(strike), float(maturity))
    s_T = S[-1]
    growth = S[1:] / S[:-1]
    values = np.column_stack([np.log(s_T * growth), np.log(v[1:]), np.log(r[1:])])
    row_labels = None if labels is None else tuple(labels)[1:]
    scenarios = ScenarioMatrix(BSMCall.feature_names, values, row_labels)
    baseline = np.array([math.log(s_T), math.log(v[-1]), math.log(r[-1])])
    return BsmScenarioSet(scenarios, baseline, model)
