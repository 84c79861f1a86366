"""Sample estimators of the risk functionals used in characteristic functions.

All measures follow the loss convention on a vector of returns ``y``:
a larger loss gives a larger risk value. Tail measures use the lower order
statistic at rank ``k = ceil(alpha * n)``:

* ``VaR_alpha(y) = -y_(k)`` with ``y_(1) <= ... <= y_(n)``;
* ``CVaR_alpha(y) = min_z  z + sum(max(-y_i - z, 0)) / (alpha * n)``,
  evaluated in closed form at its minimiser ``z = VaR_alpha(y)``.

Sums go through :func:`math.fsum` over sorted or element-wise quantities, so
every estimator is bit-identical under any permutation of its input.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

# alpha * n is formed in floating point; 0.05 * 60 == 3.0000000000000004
_TAIL_ROUNDING = 1e-9


class RiskKind(str, enum.Enum):
    STD = "std"
    VARIANCE = "variance"
    VAR = "var"
    CVAR = "cvar"


# CLI spelling: "var" is the variance, "varq" the quantile (value-at-risk).
FLAG_KINDS = {
    "std": RiskKind.STD,
    "var": RiskKind.VARIANCE,
    "varq": RiskKind.VAR,
    "cvar": RiskKind.CVAR,
}

_TAIL_KINDS = (RiskKind.VAR, RiskKind.CVAR)


@dataclass(frozen=True)
class RiskMeasureSpec:
    """Which risk functional to apply, and its tail level.

    ``ddof`` only affects the dispersion measures; the default 0 is the
    population estimator so that every measure is a functional of the same
    empirical distribution.
    """

    kind: RiskKind
    alpha: float | None = None
    ddof: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", RiskKind(self.kind))
        if self.kind in _TAIL_KINDS:
            if self.alpha is None:
                raise ValueError(f"{self.kind.value} requires alpha")
            alpha = float(self.alpha)
            if not 0.0 < alpha < 1.0:
                raise ValueError(f"alpha must lie strictly in (0, 1), got {alpha}")
            object.__setattr__(self, "alpha", alpha)
        elif self.alpha is not None:
            raise ValueError(f"{self.kind.value} takes no alpha")
        if self.ddof not in (0, 1):
            raise ValueError("ddof must be 0 or 1")

    @classmethod
    def from_flag(cls, flag: str, alpha: float | None = None, ddof: int = 0) -> RiskMeasureSpec:
        try:
            kind = FLAG_KINDS[flag]
        except KeyError:
            raise ValueError(f"unknown risk flag {flag!r}; expected one of {sorted(FLAG_KINDS)}") from None
        if kind not in _TAIL_KINDS:
            alpha = None
        return cls(kind, alpha, ddof)

    @property
    def subadditive(self) -> bool:
        return self.kind in (RiskKind.STD, RiskKind.CVAR)

    @property
    def is_tail(self) -> bool:
        return self.kind in _TAIL_KINDS

    def label(self) -> str:
        if self.is_tail:
            return f"{self.kind.value}_{self.alpha:g}"
        return self.kind.value


def tail_size(alpha: float, n: int) -> int:
    """Rank ``ceil(alpha * n)`` of the tail order statistic, at least 1."""
    return max(1, math.ceil(alpha * n - _TAIL_ROUNDING))


def _check_outcomes(y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.ndim != 1:
        raise ValueError(f"outcomes must be one-dimensional, got shape {y.shape}")
    if y.size == 0:
        raise ValueError("outcomes are empty")
    if not np.all(np.isfinite(y)):
        bad = int(np.flatnonzero(~np.isfinite(y))[0])
        raise ValueError(f"non-finite outcome at index {bad}: {y[bad]}")
    return y


def _variance(y: np.ndarray, ddof: int) -> float:
    n = y.size
    if n - ddof <= 0:
        raise ValueError(f"need more than {ddof} outcome(s) for ddof={ddof}")
    if y.min() == y.max():
        # the rounded mean of a constant need not equal the constant
        return 0.0
    mean = math.fsum(y) / n
    return math.fsum((y - mean) ** 2) / (n - ddof)


def value_at_risk(y: np.ndarray, alpha: float) -> float:
    k = tail_size(alpha, y.size)
    return -float(np.sort(y)[k - 1])


def conditional_value_at_risk(y: np.ndarray, alpha: float) -> float:
    n = y.size
    k = tail_size(alpha, n)
    worst = np.sort(y)[:k]
    zeta = -float(worst[-1])
    # the k-th excess is zero; fractional alpha*n leaves a negative zeta weight
    excess = math.fsum(-worst - zeta)
    return zeta + excess / (alpha * n)


def _evaluate_1d(spec: RiskMeasureSpec, y: np.ndarray) -> float:
    if spec.kind is RiskKind.STD:
        return math.sqrt(_variance(y, spec.ddof))
    if spec.kind is RiskKind.VARIANCE:
        return _variance(y, spec.ddof)
    if spec.kind is RiskKind.VAR:
        return value_at_risk(y, spec.alpha)
    return conditional_value_at_risk(y, spec.alpha)


def evaluate(spec: RiskMeasureSpec, outcomes):
    """Apply the risk measure to a sample of outcomes.

    Parameters
    ----------
    spec : RiskMeasureSpec
    outcomes : array_like
        A vector of ``n`` finite outcomes, or a 2-D array whose rows are
        independent samples.

    Returns
    -------
    float or numpy.ndarray
        Scalar risk for 1-D input, one risk value per row for 2-D input.
    """
    arr = np.asarray(outcomes, dtype=float)
    if arr.ndim == 2:
        return np.array([_evaluate_1d(spec, _check_outcomes(row)) for row in arr])
    return _evaluate_1d(spec, _check_outcomes(arr))
