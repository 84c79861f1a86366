"""Characteristic games and Shapley allocators.

Coalitions are bitmasks: feature ``i`` (0-based) is a member of ``S`` when
bit ``i`` is set. Three games are provided:

* :class:`SampleRiskGame` -- risk of the model output over a scenario
  sample, with out-of-coalition columns overwritten by baseline constants;
* :class:`BaselineGame` -- the model output at one explicand, with
  out-of-coalition entries replaced by the baseline;
* :class:`GaussianRiskGame` -- closed-form standard deviation or variance
  of a linear portfolio with a known covariance matrix.

:func:`shapley_exact` enumerates every coalition once; :func:`shapley_sampled`
averages marginal contributions over random permutations.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Iterable, Sequence

import numpy as np

from riskshap import risk_measures
from riskshap.errors import EnumerationLimitError, GameEvaluationError
from riskshap.models import LinearPortfolio, evaluate_model
from riskshap.report import AttributionReport
from riskshap.risk_measures import RiskKind, RiskMeasureSpec

ENUMERATION_GUARD = 25
# coalitions are stored in int64 bitmasks
MAX_SAMPLED_FEATURES = 62
PSD_TOLERANCE = 1e-10


def subset_to_mask(S: Iterable[int], m: int) -> int:
    mask = 0
    for i in S:
        i = int(i)
        if not 0 <= i < m:
            raise ValueError(f"feature index {i} outside 0..{m - 1}")
        mask |= 1 << i
    return mask


def mask_to_subset(mask: int, m: int) -> tuple[int, ...]:
    return tuple(i for i in range(m) if mask >> i & 1)


def _default_names(m: int) -> tuple[str, ...]:
    return tuple(f"x{i + 1}" for i in range(m))


def _names(feature_names, m):
    if feature_names is None:
        return _default_names(m)
    names = tuple(str(n) for n in feature_names)
    if len(names) != m:
        raise ValueError(f"{len(names)} feature names for {m} features")
    return names


class SampleRiskGame:
    """Risk of the model output over realised scenarios (sample version).

    ``v(S) = risk([f(x_i restricted to S, baseline elsewhere) for each scenario i])``.
    """

    mode = "SRAM"

    def __init__(self, model, scenarios, baseline, risk: RiskMeasureSpec, feature_names=None):
        if hasattr(scenarios, "values") and hasattr(scenarios, "columns"):
            feature_names = feature_names if feature_names is not None else scenarios.columns
            scenarios = scenarios.values
        X = np.array(scenarios, dtype=float)
        if X.ndim != 2 or X.shape[0] == 0:
            raise ValueError("scenario matrix must be a nonempty 2-D array")
        if not np.all(np.isfinite(X)):
            raise ValueError("scenario matrix has non-finite entries")
        base = np.array(baseline, dtype=float)
        m = X.shape[1]
        if base.shape != (m,):
            raise ValueError(f"baseline has shape {base.shape}, scenario matrix has {m} columns")
        if not np.all(np.isfinite(base)):
            raise ValueError("baseline has non-finite entries")
        if model.n_features != m:
            raise ValueError(f"model expects {model.n_features} features, scenarios have {m}")
        X.setflags(write=False)
        base.setflags(write=False)
        self.model = model
        self.scenarios = X
        self.baseline = base
        self.risk = risk
        self.feature_names = _names(feature_names, m)

    @property
    def n_features(self) -> int:
        return self.scenarios.shape[1]

    def outcomes(self, mask: int) -> np.ndarray:
        members = (mask >> np.arange(self.n_features)) & 1 == 1
        Z = np.where(members, self.scenarios, self.baseline)
        return evaluate_model(self.model, Z)

    def value(self, mask: int) -> float:
        return risk_measures.evaluate(self.risk, self.outcomes(mask))


class BaselineGame:
    """Model output at an explicand with absent features set to the baseline."""

    mode = "BAM"

    def __init__(self, model, explicand, baseline, feature_names=None):
        xbar = np.array(explicand, dtype=float)
        base = np.array(baseline, dtype=float)
        m = model.n_features
        if xbar.shape != (m,) or base.shape != (m,):
            raise ValueError(f"explicand {xbar.shape} and baseline {base.shape} must both have length {m}")
        self.model = model
        self.explicand = xbar
        self.baseline = base
        self.feature_names = _names(feature_names, m)

    @property
    def n_features(self) -> int:
        return self.explicand.size

    def value(self, mask: int) -> float:
        members = (mask >> np.arange(self.n_features)) & 1 == 1
        return evaluate_model(self.model, np.where(members, self.explicand, self.baseline))


class GaussianRiskGame:
    """Closed-form risk of ``sum_{i in S} c_i X_i`` for a known covariance.

    Only the dispersion measures have closed forms here: ``v(S)`` is
    ``c_S' Sigma_SS c_S`` for the variance and its square root for the
    standard deviation.
    """

    mode = "RAM-analytic-Gaussian"

    def __init__(self, weights, covariance, risk: RiskMeasureSpec, feature_names=None):
        c = np.array(weights, dtype=float)
        cov = np.array(covariance, dtype=float)
        m = c.size
        if c.ndim != 1 or cov.shape != (m, m):
            raise ValueError(f"covariance must be {m}x{m} to match the weights")
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(cov))):
            raise ValueError("weights and covariance must be finite")
        if not np.allclose(cov, cov.T, rtol=0.0, atol=PSD_TOLERANCE):
            raise ValueError("covariance matrix is not symmetric")
        if np.any(np.diag(cov) < 0):
            raise ValueError("covariance matrix has a negative variance")
        min_eig = float(np.linalg.eigvalsh(cov).min())
        if min_eig < -PSD_TOLERANCE:
            raise ValueError(f"covariance matrix is not PSD (smallest eigenvalue {min_eig:.3e})")
        if risk.kind not in (RiskKind.STD, RiskKind.VARIANCE):
            raise ValueError("the Gaussian closed form supports only std and variance")
        self.weights = c
        self.covariance = cov
        self.risk = risk
        self.feature_names = _names(feature_names, m)

    @classmethod
    def from_std_corr(cls, sigmas, corr, risk: RiskMeasureSpec, weights=None, feature_names=None):
        """Build from volatilities and a correlation matrix (or a scalar pairwise correlation)."""
        s = np.array(sigmas, dtype=float)
        m = s.size
        R = np.array(corr, dtype=float)
        if R.ndim == 0:
            R = np.full((m, m), float(R))
            np.fill_diagonal(R, 1.0)
        cov = R * np.outer(s, s)
        c = np.ones(m) if weights is None else weights
        return cls(c, cov, risk, feature_names)

    @property
    def n_features(self) -> int:
        return self.weights.size

    def value(self, mask: int) -> float:
        idx = [i for i in range(self.n_features) if mask >> i & 1]
        if not idx:
            return 0.0
        c = self.weights[idx]
        q = float(c @ self.covariance[np.ix_(idx, idx)] @ c)
        if self.risk.kind is RiskKind.VARIANCE:
            return q
        return math.sqrt(max(q, 0.0))


def char_value(game, S) -> float:
    """Characteristic value of coalition ``S`` (an index collection or a bitmask)."""
    m = game.n_features
    if isinstance(S, (int, np.integer)):
        mask = int(S)
        if mask < 0 or mask >> m:
            raise ValueError(f"bitmask {mask} has bits outside the {m} features")
    else:
        mask = subset_to_mask(S, m)
    return _evaluate_masks(game, [mask])[0]


def _evaluate_masks(game, masks: Sequence[int], threads: int = 1) -> np.ndarray:
    m = game.n_features

    def one(mask):
        mask = int(mask)
        try:
            return game.value(mask)
        except (ValueError, ArithmeticError) as exc:
            if isinstance(exc, GameEvaluationError):
                raise
            raise GameEvaluationError(str(exc), mask_to_subset(mask, m)) from exc

    if threads > 1 and len(masks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(one, masks))
    else:
        values = [one(mask) for mask in masks]
    return np.array(values, dtype=float)


def shapley_weights(m: int) -> np.ndarray:
    """``w[s] = s! (m-s-1)! / m!`` for ``s = 0..m-1``, without factorials."""
    w = np.empty(m)
    w[0] = 1.0 / m
    for s in range(1, m):
        w[s] = w[s - 1] * s / (m - s)
    return w


def shapley_from_table(values: np.ndarray, m: int) -> np.ndarray:
    """Shapley values from a full table ``values[mask]`` of all ``2**m`` coalitions."""
    masks = np.arange(1 << m, dtype=np.int64)
    sizes = np.bitwise_count(masks)
    w = shapley_weights(m)
    phi = np.empty(m)
    for i in range(m):
        bit = 1 << i
        without = masks[(masks & bit) == 0]
        phi[i] = np.sum(w[sizes[without]] * (values[without | bit] - values[without]))
    return phi


def coalition_table(game, threads: int = 1, max_features: int = ENUMERATION_GUARD) -> np.ndarray:
    m = game.n_features
    if m > max_features:
        raise EnumerationLimitError(
            f"{m} features exceed the enumeration guard of {max_features}; use shapley_sampled instead"
        )
    return _evaluate_masks(game, range(1 << m), threads)


def shapley_exact(game, threads: int = 1, max_features: int = ENUMERATION_GUARD) -> AttributionReport:
    """Exact Shapley attributions by enumerating all ``2**m`` coalitions.

    Every characteristic value is computed exactly once and cached in a
    table indexed by bitmask before weighting.
    """
    m = game.n_features
    table = coalition_table(game, threads, max_features)
    phi = shapley_from_table(table, m)
    v_full, v_empty = float(table[-1]), float(table[0])
    return AttributionReport(
        attributions=phi,
        v_full=v_full,
        v_empty=v_empty,
        method="exact",
        completeness_residual=abs(float(np.sum(phi)) - (v_full - v_empty)),
        feature_names=game.feature_names,
    )


def shapley_sampled(game, permutations: int, seed: int = 0, threads: int = 1) -> AttributionReport:
    """Permutation-sampling estimate of the Shapley values.

    For each of ``permutations`` uniformly drawn orderings, every feature
    receives its marginal contribution ``v(pred + i) - v(pred)``. The report
    carries the mean and its standard error (sample std / sqrt(permutations)).
    Distinct coalitions are evaluated once each, so the result depends only on
    ``(game, permutations, seed)`` and never on ``threads``.
    """
    if permutations < 2:
        raise ValueError("need at least 2 permutations")
    m = game.n_features
    if m > MAX_SAMPLED_FEATURES:
        raise EnumerationLimitError(f"sampling supports at most {MAX_SAMPLED_FEATURES} features, got {m}")
    rng = np.random.default_rng(seed)
    order = rng.permuted(np.tile(np.arange(m, dtype=np.int64), (permutations, 1)), axis=1)
    bits = np.left_shift(np.int64(1), order)
    after = np.cumsum(bits, axis=1)
    before = after - bits
    full = (1 << m) - 1
    keys = np.concatenate([before.ravel(), after.ravel(), np.array([0, full], dtype=np.int64)])
    unique, inverse = np.unique(keys, return_inverse=True)
    values = _evaluate_masks(game, unique.tolist(), threads)
    cells = permutations * m
    gains = values[inverse[cells : 2 * cells]] - values[inverse[:cells]]
    marginals = np.empty((permutations, m))
    np.put_along_axis(marginals, order, gains.reshape(permutations, m), axis=1)

    attributions = marginals.mean(axis=0)
    stderr = marginals.std(axis=0, ddof=1) / math.sqrt(permutations)
    constant = np.ptp(marginals, axis=0) == 0
    attributions[constant] = marginals[0, constant]
    stderr[constant] = 0.0

    v_empty = float(values[inverse[-2]])
    v_full = float(values[inverse[-1]])
    return AttributionReport(
        attributions=attributions,
        v_full=v_full,
        v_empty=v_empty,
        method="sampled",
        completeness_residual=abs(float(np.sum(attributions)) - (v_full - v_empty)),
        feature_names=game.feature_names,
        stderr=stderr,
        permutations=int(permutations),
        seed=seed,
    )


def euler_allocation(returns, weights, spec: RiskMeasureSpec) -> np.ndarray:
    """Euler (marginal-contribution) risk allocation of a linear portfolio.

    ``weights`` may be a weight vector or a :class:`LinearPortfolio`; any
    other model is rejected because the decomposition needs a degree-one
    homogeneous function.

    * std: ``A_i = c_i Cov(X_i, Xc) / std(Xc)``.
    * CVaR: ``A_i = -mean of c_i x_i`` over the ``ceil(alpha n)`` worst
      portfolio scenarios, ties broken by scenario index. The sum equals the
      CVaR estimate exactly when ``alpha n`` is an integer.
    """
    if isinstance(weights, LinearPortfolio):
        c = np.asarray(weights.weights)
    elif hasattr(weights, "n_features"):
        raise TypeError(
            f"Euler allocation needs a linear portfolio, got {type(weights).__name__}; "
            "it only applies to homogeneous functions of degree one"
        )
    else:
        c = np.asarray(weights, dtype=float)
    X = np.asarray(getattr(returns, "values", returns), dtype=float)
    if X.ndim != 2 or X.shape[1] != c.size:
        raise ValueError(f"returns of shape {X.shape} do not match {c.size} weights")
    if not np.all(np.isfinite(X)):
        raise ValueError("returns have non-finite entries")
    n = X.shape[0]
    y = X @ c

    if spec.kind is RiskKind.STD:
        if n - spec.ddof <= 0:
            raise ValueError("not enough scenarios")
        sd = risk_measures.evaluate(spec, y)
        if sd == 0.0:
            return np.zeros(c.size)
        centered = X - X.mean(axis=0)
        cov_with_portfolio = centered.T @ (y - y.mean()) / (n - spec.ddof)
        return c * cov_with_portfolio / sd
    if spec.kind is RiskKind.CVAR:
        k = risk_measures.tail_size(spec.alpha, n)
        tail = np.argsort(y, kind="stable")[:k]
        return -(X[tail] * c).sum(axis=0) / k
    raise ValueError(f"Euler allocation supports std and cvar, not {spec.kind.value}")


__all__ = [
    "BaselineGame",
    "ENUMERATION_GUARD",
    "GaussianRiskGame",
    "SampleRiskGame",
    "char_value",
    "coalition_table",
    "euler_allocation",
    "mask_to_subset",
    "shapley_exact",
    "shapley_from_table",
    "shapley_sampled",
    "shapley_weights",
    "subset_to_mask",
]
