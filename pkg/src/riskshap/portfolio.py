"""Minimum-CVaR long-only portfolios.

The optimiser solves the linear program

    min  zeta + sum(u) / (alpha n)
    s.t. u_i >= -x_i . c - zeta,  u_i >= 0,  sum(c) = 1,  c >= 0

with the dense simplex in :mod:`riskshap.simplex`. At the optimum the
objective equals the empirical CVaR of the chosen portfolio under
:func:`riskshap.risk_measures.conditional_value_at_risk`.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from riskshap.errors import IterationLimitError
from riskshap.risk_measures import RiskKind, RiskMeasureSpec, evaluate
from riskshap.simplex import solve_lp

GRID_MAX_ASSETS = 3


@dataclass(frozen=True)
class CvarOptimum:
    weights: np.ndarray
    optimal_cvar: float
    lp_objective: float
    threshold: float
    iterations: int


class GridOptimum(NamedTuple):
    weights: np.ndarray
    cvar: float


def _returns_matrix(returns) -> np.ndarray:
    X = np.asarray(getattr(returns, "values", returns), dtype=float)
    if X.ndim != 2 or X.size == 0:
        raise ValueError("returns must be a nonempty n x m matrix")
    if not np.all(np.isfinite(X)):
        raise ValueError("returns have non-finite entries")
    return X


def _clean_weights(w: np.ndarray) -> np.ndarray:
    w = np.clip(w, 0.0, None)
    return w / w.sum()


def _spread_over_duplicates(X: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Share each group of identical asset columns' weight equally.

    The portfolio ``X @ w`` is unchanged, so this only picks the
    equal-weight point among otherwise tied optima.
    """
    _, group = np.unique(X.T, axis=0, return_inverse=True)
    group = group.ravel()
    totals = np.bincount(group, weights=w)
    sizes = np.bincount(group)
    return totals[group] / sizes[group]


def min_cvar_weights(returns, alpha: float, max_iter: int | None = None) -> CvarOptimum:
    """Long-only, fully invested portfolio with the smallest CVaR_alpha.

    Raises
    ------
    ValueError
        If ``alpha * n < 1`` (empty tail) or the data are malformed.
    IterationLimitError
        When the cap ``50 (n + m)`` is hit; ``best_x`` holds the last
        feasible weight vector.
    """
    X = _returns_matrix(returns)
    n, m = X.shape
    spec = RiskMeasureSpec(RiskKind.CVAR, alpha)
    if alpha * n < 1.0 - 1e-9:
        raise ValueError(f"alpha * n = {alpha * n:.4g} < 1: the CVaR tail would be empty; need n >= 1/alpha")
    kappa = 1.0 / (alpha * n)

    # variables: c (m), zeta+ , zeta-, u (n)
    nv = m + 2 + n
    cost = np.zeros(nv)
    cost[m], cost[m + 1] = 1.0, -1.0
    cost[m + 2 :] = kappa
    A_ub = np.zeros((n, nv))
    A_ub[:, :m] = -X
    A_ub[:, m] = -1.0
    A_ub[:, m + 1] = 1.0
    A_ub[:, m + 2 :] = -np.eye(n)
    A_eq = np.zeros((1, nv))
    A_eq[0, :m] = 1.0

    if max_iter is None:
        max_iter = 50 * (n + m)
    try:
        res = solve_lp(cost, A_ub, np.zeros(n), A_eq, np.ones(1), max_iter=max_iter)
    except IterationLimitError as exc:
        best = None if exc.best_x is None else _clean_weights(exc.best_x[:m])
        raise IterationLimitError(str(exc), best_x=best, iterations=exc.iterations) from exc

    weights = _spread_over_duplicates(X, _clean_weights(res.x[:m]))
    return CvarOptimum(
        weights=weights,
        optimal_cvar=evaluate(spec, X @ weights),
        lp_objective=res.objective,
        threshold=float(res.x[m] - res.x[m + 1]),
        iterations=res.iterations,
    )


def simplex_lattice(m: int, step: float) -> np.ndarray:
    """All weight vectors on the probability simplex with coordinates in multiples of ``step``."""
    if not 0.0 < step <= 1.0:
        raise ValueError(f"step must lie in (0, 1], got {step}")
    N = round(1.0 / step)
    if abs(N * step - 1.0) > 1e-9:
        raise ValueError(f"step {step} does not divide 1")
    points = [
        combo + (N - sum(combo),)
        for combo in itertools.product(range(N + 1), repeat=m - 1)
        if sum(combo) <= N
    ]
    return np.array(points, dtype=float) / N


def grid_oracle(returns, alpha: float, step: float = 0.01) -> GridOptimum:
    """Brute-force minimum-CVaR weights over a simplex lattice (``m <= 3``).

    The first lattice point in lexicographic order wins ties.
    """
    X = _returns_matrix(returns)
    m = X.shape[1]
    if m > GRID_MAX_ASSETS:
        raise ValueError(f"grid oracle handles at most {GRID_MAX_ASSETS} assets, got {m}")
    grid = simplex_lattice(m, step)
    spec = RiskMeasureSpec(RiskKind.CVAR, alpha)
    cvars = evaluate(spec, grid @ X.T)
    best = int(np.argmin(cvars))
    return GridOptimum(grid[best], float(cvars[best]))
