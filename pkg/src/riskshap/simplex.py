"""Dense two-phase tableau simplex.

Solves ``min c'x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  x >= 0``.

Pricing is Dantzig's most-negative reduced cost. After a run of
consecutive degenerate pivots as long as the basis (at least
``BLAND_AFTER``) the solver switches to Bland's smallest-index rule until
the objective strictly improves again, which rules out cycling. The
leaving row is always chosen by the minimum ratio with ties going to the
smallest basic-variable index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from riskshap.errors import InfeasibleError, IterationLimitError, UnboundedError

BLAND_AFTER = 50


@dataclass(frozen=True)
class LpResult:
    x: np.ndarray
    objective: float
    iterations: int


class _Tableau:
    def __init__(self, T, basis, max_iter, tol, n_orig):
        self.T = T
        self.basis = basis
        self.max_iter = max_iter
        self.tol = tol
        self.n_orig = n_orig
        self.iterations = 0
        self.bland_after = max(BLAND_AFTER, T.shape[0] - 1)

    def primal(self) -> np.ndarray:
        x = np.zeros(self.T.shape[1] - 1)
        for r, j in enumerate(self.basis):
            x[j] = self.T[r, -1]
        return x[: self.n_orig]

    def pivot(self, r: int, j: int) -> None:
        T = self.T
        T[r] /= T[r, j]
        col = T[:, j].copy()
        col[r] = 0.0
        T -= np.outer(col, T[r])
        T[:, j] = 0.0
        T[r, j] = 1.0
        self.basis[r] = j

    def run(self, n_cols: int, feasible: bool) -> None:
        """Iterate to optimality over the first ``n_cols`` columns."""
        T, tol = self.T, self.tol
        degenerate_run = 0
        while True:
            reduced = T[-1, :n_cols]
            if degenerate_run >= self.bland_after:
                improving = np.flatnonzero(reduced < -tol)
                if improving.size == 0:
                    return
                j = int(improving[0])
            else:
                j = int(np.argmin(reduced))
                if reduced[j] >= -tol:
                    return
            column = T[:-1, j]
            rows = np.flatnonzero(column > tol)
            if rows.size == 0:
                raise UnboundedError(f"objective unbounded along column {j}")
            ratios = T[rows, -1] / column[rows]
            best = ratios.min()
            ties = rows[ratios <= best + tol * 1e-3]
            r = int(min(ties, key=lambda k: self.basis[k]))
            if self.iterations >= self.max_iter:
                raise IterationLimitError(
                    f"simplex iteration cap {self.max_iter} reached",
                    best_x=self.primal() if feasible else None,
                    iterations=self.iterations,
                )
            self.pivot(r, j)
            self.iterations += 1
            degenerate_run = degenerate_run + 1 if best <= tol else 0


def solve_lp(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, max_iter: int | None = None, tol: float = 1e-9) -> LpResult:
    """Minimise ``c'x`` over the polyhedron; see the module docstring.

    Raises
    ------
    InfeasibleError
        Phase one ends with a positive artificial sum.
    UnboundedError
        An improving column has no positive entry.
    IterationLimitError
        More than ``max_iter`` pivots (default ``50 * (rows + cols)``).
    """
    c = np.asarray(c, dtype=float)
    nv = c.size
    A_ub = np.zeros((0, nv)) if A_ub is None else np.asarray(A_ub, dtype=float).reshape(-1, nv)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).ravel()
    A_eq = np.zeros((0, nv)) if A_eq is None else np.asarray(A_eq, dtype=float).reshape(-1, nv)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).ravel()
    if A_ub.shape[0] != b_ub.size or A_eq.shape[0] != b_eq.size:
        raise ValueError("constraint matrices and right-hand sides disagree in length")

    m_ub, m_eq = A_ub.shape[0], A_eq.shape[0]
    rows = m_ub + m_eq
    flip_ub = b_ub < 0
    flip_eq = b_eq < 0
    # artificials go on every equality row and on each flipped inequality
    art_rows = [i for i in range(m_ub) if flip_ub[i]] + list(range(m_ub, rows))
    n_art = len(art_rows)
    n_cols = nv + m_ub + n_art
    if max_iter is None:
        max_iter = 50 * (rows + n_cols)

    T = np.zeros((rows + 1, n_cols + 1))
    sign_ub = np.where(flip_ub, -1.0, 1.0)
    T[:m_ub, :nv] = A_ub * sign_ub[:, None]
    T[:m_ub, nv : nv + m_ub] = np.diag(sign_ub)
    T[:m_ub, -1] = b_ub * sign_ub
    sign_eq = np.where(flip_eq, -1.0, 1.0)
    T[m_ub:rows, :nv] = A_eq * sign_eq[:, None]
    T[m_ub:rows, -1] = b_eq * sign_eq

    basis = [nv + i for i in range(m_ub)] + [0] * m_eq
    for k, r in enumerate(art_rows):
        T[r, nv + m_ub + k] = 1.0
        basis[r] = nv + m_ub + k

    tab = _Tableau(T, basis, max_iter, tol, nv)

    if n_art:
        T[-1, nv + m_ub : n_cols] = 1.0
        for r in art_rows:
            T[-1] -= T[r]
        tab.run(n_cols, feasible=False)
        scale = max(1.0, float(np.abs(T[:-1, -1]).max(initial=0.0)))
        if -T[-1, -1] > tol * scale:
            raise InfeasibleError(f"infeasible: phase one ends at {-T[-1, -1]:.3e}")
        # drive zero-level artificials out of the basis, dropping redundant rows
        keep = []
        for r in range(rows):
            if tab.basis[r] >= nv + m_ub:
                candidates = np.flatnonzero(np.abs(T[r, : nv + m_ub]) > tol)
                if candidates.size == 0:
                    continue
                tab.pivot(r, int(candidates[0]))
            keep.append(r)
        if len(keep) < rows:
            tab.T = T = np.vstack([T[keep], T[-1:]])
            tab.basis = [tab.basis[r] for r in keep]
        tab.T = T = np.hstack([T[:, : nv + m_ub], T[:, -1:]])

    T[-1] = 0.0
    T[-1, :nv] = c
    for r, j in enumerate(tab.basis):
        if T[-1, j] != 0.0:
            T[-1] -= T[-1, j] * T[r]
    tab.run(nv + m_ub, feasible=True)
    x = tab.primal()
    return LpResult(x=x, objective=float(c @ x), iterations=tab.iterations)
