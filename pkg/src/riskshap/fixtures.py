"""Synthetic data sets used by the demos, the CLI bundle and the tests."""

from __future__ import annotations

import datetime as dt
import json
from pathlib import Path

import numpy as np

from riskshap.data_io import ScenarioMatrix, save_csv
from riskshap.models import BSMCall, LinearPortfolio, model_to_dict


def gaussian_sample(covariance, n: int, seed: int = 0, exact_moments: bool = False, mean=None) -> np.ndarray:
    """Draw ``n`` rows from N(mean, covariance).

    With ``exact_moments`` the draw is re-centred and re-coloured so that its
    population (divide-by-n) mean and covariance equal the targets up to
    rounding.
    """
    cov = np.atleast_2d(np.asarray(covariance, dtype=float))
    m = cov.shape[0]
    mu = np.zeros(m) if mean is None else np.asarray(mean, dtype=float)
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((n, m))
    if exact_moments:
        if n <= m:
            raise ValueError("exact moments need more rows than columns")
        Z = Z - Z.mean(axis=0)
        L_hat = np.linalg.cholesky(Z.T @ Z / n)
        Z = np.linalg.solve(L_hat, Z.T).T
    # eigen factor tolerates singular (e.g. perfectly correlated) targets
    vals, vecs = np.linalg.eigh(cov)
    factor = vecs * np.sqrt(np.clip(vals, 0.0, None))
    return Z @ factor.T + mu


def gaussian_pair(sigmas=(3.0, 4.0), rho: float = 0.0, n: int = 200_000, seed: int = 0) -> ScenarioMatrix:
    s1, s2 = sigmas
    cov = [[s1 * s1, rho * s1 * s2], [rho * s1 * s2, s2 * s2]]
    return ScenarioMatrix(("x1", "x2"), gaussian_sample(cov, n, seed))


def _business_days(start: dt.date, count: int) -> list[str]:
    days, d = [], start
    while len(days) < count:
        if d.weekday() < 5:
            days.append(d.isoformat())
        d += dt.timedelta(days=1)
    return days


def synthetic_market_year(n_days: int = 253, seed: int = 2008) -> ScenarioMatrix:
    """One trading year of index level, implied vol and short rate.

    * price: lognormal, 2.6% daily volatility, ending near 890;
    * vol: mean-reverting log-volatility around 40% annualized;
    * rate: almost constant around 2%.
    """
    rng = np.random.default_rng(seed)
    log_ret = 0.026 * rng.standard_normal(n_days - 1)
    price = 890.0 * np.exp(np.concatenate([[0.0], np.cumsum(log_ret)]) - np.sum(log_ret))
    log_vol = np.empty(n_days)
    log_vol[0] = np.log(0.40)
    for t in range(1, n_days):
        log_vol[t] = log_vol[t - 1] + 0.08 * (np.log(0.40) - log_vol[t - 1]) + 0.035 * rng.standard_normal()
    rate = 0.02 * np.exp(0.002 * rng.standard_normal(n_days))
    values = np.column_stack([price, np.exp(log_vol), rate])
    return ScenarioMatrix(("price", "vol", "rate"), values, _business_days(dt.date(2008, 1, 2), n_days))


SYNTHETIC_STRIKE = 800.0
SYNTHETIC_MATURITY = 30.0 / 365.0


def linear_demo_returns(n: int = 500, seed: int = 11) -> ScenarioMatrix:
    cov = np.array([[1.0e-4, 3.0e-5], [3.0e-5, 2.25e-4]])
    return ScenarioMatrix(("asset_a", "asset_b"), gaussian_sample(cov, n, seed, mean=[4e-4, 2e-4]))


def write_demo_bundle(directory, gaussian_rows: int = 200_000) -> dict:
    """Write every demo input into ``directory``; returns the file paths by role."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)

    def dump(obj, name):
        p = out / name
        p.write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8")
        return p

    paths = {}
    paths["linear_returns"] = out / "linear_returns.csv"
    save_csv(linear_demo_returns(), paths["linear_returns"])
    paths["linear_model"] = dump(model_to_dict(LinearPortfolio([1.0, 1.0])), "linear_model.json")

    paths["gaussian_returns"] = out / "gaussian_pair.csv"
    save_csv(gaussian_pair(n=gaussian_rows), paths["gaussian_returns"])

    paths["market_year"] = out / "market_year.csv"
    save_csv(synthetic_market_year(), paths["market_year"])
    paths["bsm_model"] = dump(model_to_dict(BSMCall(SYNTHETIC_STRIKE, SYNTHETIC_MATURITY)), "bsm_model.json")
    return paths
