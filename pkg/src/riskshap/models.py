"""Model evaluators: linear portfolios, the BSM call, ReLU networks and the
residual-augmented wrapper, plus the JSON model-file loader.

Every model is immutable and exposes ``n_features`` and ``batch(X)``, which
maps an ``(n, m)`` input array to ``n`` outputs. :func:`evaluate_model` is
the validated entry point.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import ndtr

from riskshap.errors import InputError, ModelEvaluationError, ModelFileError


def norm_cdf(x):
    """Standard normal CDF.

    Backed by ``scipy.special.ndtr`` (erf/erfc based); absolute error is
    at the level of double rounding, well inside 1e-12.
    """
    return ndtr(x)


def bsm_price(S, K, tau, sigma, r):
    """Black-Scholes-Merton price of a European call.

    Arguments broadcast against each other. ``sigma == 0`` uses the
    deterministic limit ``max(S - K exp(-r tau), 0)``; ``S == 0`` prices at 0.

    Parameters
    ----------
    S : array_like
        Spot price, ``S >= 0``.
    K : array_like
        Strike, ``K > 0``.
    tau : array_like
        Time to maturity in years, ``tau > 0``.
    sigma : array_like
        Annualized volatility, ``sigma >= 0``.
    r : array_like
        Annualized continuously compounded rate.
    """
    S, K, tau, sigma, r = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (S, K, tau, sigma, r)))
    for name, arr in (("S", S), ("K", K), ("tau", tau), ("sigma", sigma), ("r", r)):
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"{name} must be finite")
    if np.any(S < 0):
        raise ValueError("S must be nonnegative")
    if np.any(K <= 0):
        raise ValueError("K must be positive")
    if np.any(tau <= 0):
        raise ValueError("tau must be positive")
    if np.any(sigma < 0):
        raise ValueError("sigma must be nonnegative")

    discounted_strike = K * np.exp(-r * tau)
    intrinsic = np.maximum(S - discounted_strike, 0.0)
    # a subnormal sigma can underflow sigma*sqrt(tau) to zero; price it as zero vol
    regular = (sigma * np.sqrt(tau) > 0) & (S > 0)
    price = np.where(S > 0, intrinsic, 0.0)
    if np.any(regular):
        s, k, t, v, dk = S[regular], K[regular], tau[regular], sigma[regular], discounted_strike[regular]
        vol_sqrt_t = v * np.sqrt(t)
        with np.errstate(over="ignore", divide="ignore"):
            # tiny sigma sends d1 to +-inf, where ndtr is exact
            d1 = (np.log(s / k) + (r[regular] + 0.5 * v * v) * t) / vol_sqrt_t
        d2 = d1 - vol_sqrt_t
        price[regular] = s * norm_cdf(d1) - dk * norm_cdf(d2)
    if price.ndim == 0:
        return float(price)
    return price


def _readonly(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class LinearPortfolio:
    weights: np.ndarray

    def __post_init__(self):
        w = _readonly(self.weights)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("linear weights must be a nonempty vector")
        if not np.all(np.isfinite(w)):
            raise ValueError("linear weights must be finite")
        object.__setattr__(self, "weights", w)

    @property
    def n_features(self) -> int:
        return self.weights.size

    def batch(self, X: np.ndarray) -> np.ndarray:
        return X @ self.weights


@dataclass(frozen=True)
class BSMCall:
    """Call price as a function of ``(log S, log sigma, log r)``."""

    strike: float
    maturity: float
    feature_names = ("log_price", "log_vol", "log_rate")

    def __post_init__(self):
        if not (math.isfinite(self.strike) and self.strike > 0):
            raise ValueError("strike must be positive")
        if not (math.isfinite(self.maturity) and self.maturity > 0):
            raise ValueError("maturity must be positive")

    @property
    def n_features(self) -> int:
        return 3

    def batch(self, X: np.ndarray) -> np.ndarray:
        with np.errstate(over="ignore"):
            levels = np.exp(X)
        bad = ~np.isfinite(levels)
        if bad.any():
            col = int(np.flatnonzero(bad.any(axis=0))[0])
            raise ModelEvaluationError(f"exp overflow in feature {self.feature_names[col]}")
        return bsm_price(levels[:, 0], self.strike, self.maturity, levels[:, 1], levels[:, 2])


@dataclass(frozen=True)
class FeedForward:
    """ReLU network with a linear output unit.

    ``layers`` is a sequence of ``(W, b)`` with ``W`` of shape
    ``(fan_in, fan_out)``; a forward step is ``h @ W + b``. ReLU follows
    every layer except the last. Inputs are standardised as
    ``(x - input_shift) / input_scale`` when those are given.
    """

    layers: tuple
    input_shift: np.ndarray | None = None
    input_scale: np.ndarray | None = None

    def __post_init__(self):
        if len(self.layers) == 0:
            raise ValueError("network needs at least one layer")
        layers = []
        for k, (W, b) in enumerate(self.layers):
            W, b = _readonly(W), _readonly(b)
            if W.ndim != 2 or b.ndim != 1 or W.shape[1] != b.size:
                raise ValueError(f"layer {k}: weight {W.shape} and bias {b.shape} do not match")
            if layers and layers[-1][0].shape[1] != W.shape[0]:
                raise ValueError(
                    f"layer {k}: expects {W.shape[0]} inputs but layer {k - 1} emits {layers[-1][0].shape[1]}"
                )
            if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
                raise ValueError(f"layer {k}: non-finite parameters")
            layers.append((W, b))
        if layers[-1][0].shape[1] != 1:
            raise ValueError(f"output layer must have one unit, has {layers[-1][0].shape[1]}")
        object.__setattr__(self, "layers", tuple(layers))
        m = layers[0][0].shape[0]
        for name in ("input_shift", "input_scale"):
            v = getattr(self, name)
            if v is None:
                continue
            v = _readonly(v)
            if v.shape != (m,):
                raise ValueError(f"{name} must have length {m}")
            object.__setattr__(self, name, v)
        if self.input_scale is not None and np.any(self.input_scale == 0):
            raise ValueError("input_scale entries must be nonzero")

    @property
    def n_features(self) -> int:
        return self.layers[0][0].shape[0]

    def batch(self, X: np.ndarray) -> np.ndarray:
        h = X
        if self.input_shift is not None:
            h = h - self.input_shift
        if self.input_scale is not None:
            h = h / self.input_scale
        last = len(self.layers) - 1
        for k, (W, b) in enumerate(self.layers):
            with np.errstate(over="ignore", invalid="ignore"):
                h = h @ W + b
            if not np.all(np.isfinite(h)):
                raise ModelEvaluationError(f"non-finite activation in layer {k}")
            if k < last:
                h = np.maximum(h, 0.0)
        return h[:, 0]


@dataclass(frozen=True)
class ResidualAugmented:
    """``inner(x[:m]) + x[m]``: the residual enters as one extra feature."""

    inner: object

    def __post_init__(self):
        if not isinstance(self.inner, MODEL_TYPES):
            raise ValueError(f"inner model must be a model, got {type(self.inner).__name__}")

    @property
    def n_features(self) -> int:
        return self.inner.n_features + 1

    def batch(self, X: np.ndarray) -> np.ndarray:
        return self.inner.batch(X[:, :-1]) + X[:, -1]


MODEL_TYPES = (LinearPortfolio, BSMCall, FeedForward, ResidualAugmented)


def evaluate_model(model, x):
    """Evaluate ``model`` at one input vector or at each row of a matrix.

    Returns a float for a 1-D ``x`` and an array for a 2-D ``x``.
    """
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    X = arr[None, :] if single else arr
    if X.ndim != 2:
        raise ValueError(f"input must be a vector or matrix, got shape {arr.shape}")
    if X.shape[1] != model.n_features:
        raise ValueError(f"model expects {model.n_features} features, got {X.shape[1]}")
    finite = np.isfinite(X)
    if not finite.all():
        row, col = np.argwhere(~finite)[0]
        raise InputError(f"non-finite input in feature {col} (row {row})")
    out = np.asarray(model.batch(X), dtype=float)
    if not np.all(np.isfinite(out)):
        raise ModelEvaluationError(f"non-finite model output at row {int(np.flatnonzero(~np.isfinite(out))[0])}")
    return float(out[0]) if single else out


# --------------------------------------------------------------------------
# JSON model files
# --------------------------------------------------------------------------

_VARIANTS = ("linear", "bsm_call", "mlp", "residual_augmented")


def _require(obj, key, where):
    if not isinstance(obj, dict):
        raise ModelFileError("expected an object", position=where)
    if key not in obj:
        raise ModelFileError(f"missing field {key!r}", position=where)
    return obj[key]


def _vector(value, where):
    if not isinstance(value, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        raise ModelFileError("expected an array of numbers", position=where)
    return np.array(value, dtype=float)


def _matrix(value, where):
    if not isinstance(value, list) or not value:
        raise ModelFileError("expected a nonempty array of rows", position=where)
    rows = [_vector(row, f"{where}[{i}]") for i, row in enumerate(value)]
    width = {r.size for r in rows}
    if len(width) != 1:
        raise ModelFileError("ragged matrix rows", position=where)
    return np.vstack(rows)


def _number(value, where):
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ModelFileError("expected a number", position=where)
    return float(value)


def parse_model(obj, where="$"):
    """Build a model from an already-decoded JSON object."""
    variant = _require(obj, "variant", where)
    try:
        if variant == "linear":
            return LinearPortfolio(_vector(_require(obj, "weights", where), f"{where}.weights"))
        if variant == "bsm_call":
            return BSMCall(
                _number(_require(obj, "strike", where), f"{where}.strike"),
                _number(_require(obj, "maturity", where), f"{where}.maturity"),
            )
        if variant == "mlp":
            return _parse_mlp(obj, where)
        if variant == "residual_augmented":
            return ResidualAugmented(parse_model(_require(obj, "inner", where), f"{where}.inner"))
    except ModelFileError:
        raise
    except ValueError as exc:
        raise ModelFileError(str(exc), position=where) from exc
    raise ModelFileError(f"unknown variant {variant!r}; expected one of {list(_VARIANTS)}", position=f"{where}.variant")


def _parse_mlp(obj, where):
    hidden = _require(obj, "hidden_activation", where)
    if hidden != "relu":
        raise ModelFileError(f"unsupported hidden activation {hidden!r}; only 'relu'", position=f"{where}.hidden_activation")
    output = _require(obj, "output_activation", where)
    if output != "linear":
        raise ModelFileError(f"unsupported output activation {output!r}; only 'linear'", position=f"{where}.output_activation")
    norm = _require(obj, "input_normalization", where)
    shift = scale = None
    if norm is not None:
        shift = _vector(_require(norm, "shift", f"{where}.input_normalization"), f"{where}.input_normalization.shift")
        scale = _vector(_require(norm, "scale", f"{where}.input_normalization"), f"{where}.input_normalization.scale")
    raw_layers = _require(obj, "layers", where)
    if not isinstance(raw_layers, list) or not raw_layers:
        raise ModelFileError("expected a nonempty array of layers", position=f"{where}.layers")
    layers = []
    for k, layer in enumerate(raw_layers):
        at = f"{where}.layers[{k}]"
        W = _matrix(_require(layer, "weights", at), f"{at}.weights")
        b = _vector(_require(layer, "bias", at), f"{at}.bias")
        if W.shape[1] != b.size:
            raise ModelFileError(f"weights have {W.shape[1]} columns but bias has {b.size} entries", position=at)
        if layers and layers[-1][0].shape[1] != W.shape[0]:
            raise ModelFileError(
                f"expects {W.shape[0]} inputs but previous layer emits {layers[-1][0].shape[1]}", position=f"{at}.weights"
            )
        layers.append((W, b))
    return FeedForward(tuple(layers), shift, scale)


def load_model(path) -> object:
    """Read and validate a JSON model file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ModelFileError(f"cannot read model file: {exc.strerror}", path=path) from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFileError(exc.msg, path=path, position=f"line {exc.lineno} column {exc.colno}") from exc
    try:
        return parse_model(obj)
    except ModelFileError as exc:
        raise ModelFileError(exc.message, path=path, position=exc.position) from exc


def model_to_dict(model) -> dict:
    if isinstance(model, LinearPortfolio):
        return {"variant": "linear", "weights": model.weights.tolist()}
    if isinstance(model, BSMCall):
        return {"variant": "bsm_call", "strike": model.strike, "maturity": model.maturity}
    if isinstance(model, FeedForward):
        norm = None
        if model.input_shift is not None or model.input_scale is not None:
            m = model.n_features
            shift = model.input_shift if model.input_shift is not None else np.zeros(m)
            scale = model.input_scale if model.input_scale is not None else np.ones(m)
            norm = {"shift": shift.tolist(), "scale": scale.tolist()}
        return {
            "variant": "mlp",
            "hidden_activation": "relu",
            "output_activation": "linear",
            "input_normalization": norm,
            "layers": [{"weights": W.tolist(), "bias": b.tolist()} for W, b in model.layers],
        }
    if isinstance(model, ResidualAugmented):
        return {"variant": "residual_augmented", "inner": model_to_dict(model.inner)}
    raise TypeError(f"not a model: {type(model).__name__}")


def save_model(model, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=2) + "\n", encoding="utf-8")
