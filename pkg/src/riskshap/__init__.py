"""Shapley-based risk attribution for financial models."""

from riskshap.risk_measures import RiskKind, RiskMeasureSpec, evaluate
from riskshap.models import (
    BSMCall,
    FeedForward,
    LinearPortfolio,
    ResidualAugmented,
    bsm_price,
    evaluate_model,
    load_model,
)
from riskshap.report import AttributionReport
from riskshap.shapley import (
    BaselineGame,
    GaussianRiskGame,
    SampleRiskGame,
    char_value,
    euler_allocation,
    shapley_exact,
    shapley_sampled,
)
from riskshap.data_io import (
    ScenarioMatrix,
    build_bsm_scenarios,
    compute_residuals,
    load_csv,
    save_csv,
)
from riskshap.portfolio import grid_oracle, min_cvar_weights

__version__ = "0.1.0"

__all__ = [
    "AttributionReport",
    "BSMCall",
    "BaselineGame",
    "FeedForward",
    "GaussianRiskGame",
    "LinearPortfolio",
    "ResidualAugmented",
    "RiskKind",
    "RiskMeasureSpec",
    "SampleRiskGame",
    "ScenarioMatrix",
    "bsm_price",
    "build_bsm_scenarios",
    "char_value",
    "compute_residuals",
    "euler_allocation",
    "evaluate",
    "evaluate_model",
    "grid_oracle",
    "load_csv",
    "load_model",
    "min_cvar_weights",
    "save_csv",
    "shapley_exact",
    "shapley_sampled",
]
