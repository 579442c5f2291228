"""Linear heuristic models over WL features.

Regression optimisers (``lasso``, ``gpr``, ``svr``) fit ``y = h*`` on trace states;
ranking optimisers (``rksvm``, ``rklp``) fit pairs where the worse state must score
at least 1 above the better one (heuristics estimate cost-to-go, lower is better).
All fits start from ``w = 0`` and follow fixed schedules, so they are deterministic.
"""

from __future__ import annotations

import json
import math
import time
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .kernels import ColourTable, Embedding, FeatureIndex

LASSO = "lasso"
GPR = "gpr"
SVR = "svr"
RKLP = "rklp"
RKSVM = "rksvm"
OPTIMISERS = (LASSO, GPR, SVR, RKLP, RKSVM)
RANKING_OPTIMISERS = (RKLP, RKSVM)

DEFAULTS = {
    LASSO: {"alpha": 1e-3},
    GPR: {"noise": 1.0},
    SVR: {"C": 1.0, "epsilon": 0.1},
    RKSVM: {"C": 1.0},
    RKLP: {"l1": 1e-3},
}
DEFAULT_EPOCHS = 2000
DEFAULT_ETA0 = 1.0

MODEL_FORMAT = "wlfeatures-model"
MODEL_VERSION = 1


class ModelFileError(ValueError):
    pass


class ConvergenceWarning(UserWarning):
    pass


@dataclass
class RegressionSet:
    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64)
        if self.X.ndim != 2 or len(self.X) != len(self.y):
            raise ValueError("X must be 2-D with one row per label")


@dataclass
class RankingSet:
    """Rows of embeddings plus ``(better, worse)`` row-index pairs."""

    X: np.ndarray
    pairs: np.ndarray

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.pairs = np.asarray(self.pairs, dtype=np.int64).reshape(-1, 2)
        if self.X.ndim != 2:
            raise ValueError("X must be 2-D")
        if len(self.pairs) and (self.pairs[:, 0] == self.pairs[:, 1]).any():
            raise ValueError("a ranking pair compares a row with itself")

    def differences(self) -> np.ndarray:
        """``x_worse - x_better`` per pair."""
        if not len(self.pairs):
            return np.zeros((0, self.X.shape[1]))
        return self.X[self.pairs[:, 1]] - self.X[self.pairs[:, 0]]


@dataclass
class LinearModel:
    weights: np.ndarray
    bias: float
    optimiser: str
    hyperparameters: dict = field(default_factory=dict)
    table: Optional[ColourTable] = None
    index: Optional[FeatureIndex] = None
    metrics: dict = field(default_factory=dict)
    converged: bool = True

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.index is not None and len(self.index) != len(self.weights):
            raise ValueError("weight vector and feature index differ in length")
        if not np.all(np.isfinite(self.weights)) or not math.isfinite(self.bias):
            raise ValueError("model parameters must be finite")

    @property
    def size(self) -> int:
        return len(self.weights)

    def predict(self, x) -> float:
        if isinstance(x, Embedding):
            x = x.as_float()
        x = np.asarray(x, dtype=np.float64)
        if x.shape != self.weights.shape:
            raise ValueError(f"expected {len(self.weights)} features, got shape {x.shape}")
        return float(x @ self.weights) + self.bias

    def predict_many(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != len(self.weights):
            raise ValueError(f"expected (n, {len(self.weights)}) input, got {X.shape}")
        return X @ self.weights + self.bias


def predict(model: LinearModel, x) -> float:
    return model.predict(x)


# --------------------------------------------------------------------------
# regression


def _soft(value: float, threshold: float) -> float:
    if value > threshold:
        return value - threshold
    if value < -threshold:
        return value + threshold
    return 0.0


def lasso_objective(X, y, w, b, alpha) -> float:
    r = X @ w + b - y
    return 0.5 * float(r @ r) / len(y) + alpha * float(np.abs(w).sum())


def fit_lasso(data: RegressionSet, alpha: float = DEFAULTS[LASSO]["alpha"], tol: float = 1e-10,
              max_sweeps: int = 10_000) -> LinearModel:
    """Cyclic coordinate descent on (1/2n)||Xw + b - y||^2 + alpha ||w||_1."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    X, y = data.X, data.y
    n, d = X.shape
    if n == 0:
        raise ValueError("empty regression set")
    x_mean, y_mean = X.mean(axis=0), y.mean()
    Xc = X - x_mean
    col_sq = (Xc * Xc).sum(axis=0) / n
    w = np.zeros(d)
    r = y - y_mean  # residual y_c - Xc w
    prev = 0.5 * float(r @ r) / n
    converged = d == 0
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        max_step = 0.0
        for j in range(d):
            if col_sq[j] == 0.0:
                continue
            xj = Xc[:, j]
            rho = float(xj @ r) / n + col_sq[j] * w[j]
            new = _soft(rho, alpha) / col_sq[j]
            delta = new - w[j]
            if delta != 0.0:
                r -= delta * xj
                w[j] = new
                max_step = max(max_step, abs(delta) * math.sqrt(col_sq[j]))
        obj = 0.5 * float(r @ r) / n + alpha * float(np.abs(w).sum())
        assert obj <= prev + 1e-12 * max(1.0, abs(prev)), "coordinate descent objective increased"
        prev = obj
        if max_step < tol:
            converged = True
            break
    if not converged:
        warnings.warn(f"lasso did not converge in {max_sweeps} sweeps", ConvergenceWarning)
    b = float(y_mean - x_mean @ w)
    return LinearModel(w, b, LASSO, {"alpha": alpha},
                       metrics={"eval": lasso_objective(X, y, w, b, alpha), "sweeps": sweeps},
                       converged=converged)


def fit_gpr(data: RegressionSet, noise: float = DEFAULTS[GPR]["noise"]) -> LinearModel:
    """Posterior mean of linear-kernel GP regression (ridge on centred data)."""
    if noise <= 0:
        raise ValueError("noise variance must be positive")
    X, y = data.X, data.y
    n, d = X.shape
    if n == 0:
        raise ValueError("empty regression set")
    x_mean, y_mean = X.mean(axis=0), y.mean()
    Xc, yc = X - x_mean, y - y_mean
    A = Xc.T @ Xc + noise * np.eye(d)
    w = cho_solve(cho_factor(A), Xc.T @ yc) if d else np.zeros(0)
    b = float(y_mean - x_mean @ w)
    r = Xc @ w - yc
    return LinearModel(w, b, GPR, {"noise": noise},
                       metrics={"eval": float(r @ r) + noise * float(w @ w)})


def svr_objective(X, y, w, b, C, epsilon) -> float:
    loss = np.maximum(0.0, np.abs(X @ w + b - y) - epsilon)
    return 0.5 * float(w @ w) + C * float(loss.sum())


def _best_bias(residual: np.ndarray, epsilon: float) -> float:
    """Exact minimiser of sum max(0, |residual_i + b| - eps) over b (breakpoint scan)."""
    if not len(residual):
        return 0.0
    points = np.unique(np.concatenate([-residual - epsilon, -residual + epsilon]))
    best_b, best_val = 0.0, float(np.maximum(0.0, np.abs(residual) - epsilon).sum())
    for start in range(0, len(points), 256):
        chunk = points[start:start + 256]
        vals = np.maximum(0.0, np.abs(residual[None, :] + chunk[:, None]) - epsilon).sum(axis=1)
        k = int(np.argmin(vals))
        if vals[k] < best_val - 1e-12:
            best_b, best_val = float(chunk[k]), float(vals[k])
    return best_b


def _svr_dual_cd(X, y, C, epsilon, epochs, tol=1e-8):
    """Dual coordinate descent for L1-loss SVR with the bias as a constant feature."""
    n, d = X.shape
    Xa = np.hstack([X, np.ones((n, 1))])
    q = (Xa * Xa).sum(axis=1)
    beta = np.zeros(n)
    v = np.zeros(d + 1)
    for _ in range(epochs):
        max_change = 0.0
        for i in range(n):
            g = float(Xa[i] @ v) - y[i]
            old = beta[i]
            if g + epsilon < q[i] * old:
                new = old - (g + epsilon) / q[i]
            elif g - epsilon > q[i] * old:
                new = old - (g - epsilon) / q[i]
            else:
                new = 0.0
            new = min(C, max(-C, new))
            if new != old:
                v += (new - old) * Xa[i]
                beta[i] = new
                max_change = max(max_change, abs(new - old) * math.sqrt(q[i]))
        if max_change < tol:
            break
    w = v[:d].copy()
    return w, _best_bias(X @ w - y, epsilon)


def fit_svr(data: RegressionSet, C: float = DEFAULTS[SVR]["C"], epsilon: float = DEFAULTS[SVR]["epsilon"],
            epochs: int = DEFAULT_EPOCHS, eta0: float = DEFAULT_ETA0, solver: str = "dcd") -> LinearModel:
    """Minimise 1/2||w||^2 + C sum max(0, |x.w + b - y| - eps).

    ``solver="dcd"`` runs dual coordinate descent and then refits the bias exactly;
    ``solver="subgradient"`` uses steps eta0/sqrt(t). Both keep the best iterate.
    """
    if C < 0 or epsilon < 0:
        raise ValueError("C and epsilon must be non-negative")
    if solver not in ("dcd", "subgradient"):
        raise ValueError(f"unknown solver {solver!r}")
    X, y = data.X, data.y
    n, d = X.shape
    w, b = np.zeros(d), 0.0
    if C > 0 and n:
        b = _best_bias(-y, epsilon)
    best = (svr_objective(X, y, w, b, C, epsilon), w.copy(), b)
    history = [best[0]]
    if C > 0 and n and solver == "dcd":
        w, b = _svr_dual_cd(X, y, C, epsilon, epochs)
        obj = svr_objective(X, y, w, b, C, epsilon)
        if obj < best[0]:
            best = (obj, w.copy(), b)
        history.append(best[0])
    elif C > 0 and n:
        for t in range(1, epochs + 1):
            r = X @ w + b - y
            s = np.where(r > epsilon, 1.0, np.where(r < -epsilon, -1.0, 0.0))
            eta = eta0 / math.sqrt(t)
            w = w - eta * (w + C * (X.T @ s))
            b = b - eta * C * float(s.sum())
            obj = svr_objective(X, y, w, b, C, epsilon)
            if obj < best[0]:
                best = (obj, w.copy(), b)
            history.append(best[0])
    obj, w, b = best
    return LinearModel(w, float(b), SVR, {"C": C, "epsilon": epsilon, "epochs": epochs, "solver": solver},
                       metrics={"eval": obj, "history": history})


# --------------------------------------------------------------------------
# ranking


def rank_svm_objective(Z, w, C) -> float:
    return 0.5 * float(w @ w) + C * float(np.maximum(0.0, 1.0 - Z @ w).sum())


def rank_lp_objective(Z, w, l1) -> float:
    return float(np.maximum(0.0, 1.0 - Z @ w).sum()) + l1 * float(np.abs(w).sum())


def fit_rank_svm(data: RankingSet, C: float = DEFAULTS[RKSVM]["C"], epochs: int = DEFAULT_EPOCHS,
                 eta0: float = DEFAULT_ETA0) -> LinearModel:
    """Subgradient descent on 1/2||w||^2 + C sum_pairs max(0, 1 - (w.x_worse - w.x_better))."""
    if C <= 0:
        raise ValueError("C must be positive")
    Z = data.differences()
    w = np.zeros(data.X.shape[1])
    best = (rank_svm_objective(Z, w, C), w.copy())
    if len(Z):
        for t in range(1, epochs + 1):
            active = Z @ w < 1.0
            g = w - C * Z[active].sum(axis=0)
            w = w - (eta0 / math.sqrt(t)) * g
            obj = rank_svm_objective(Z, w, C)
            if obj < best[0]:
                best = (obj, w.copy())
    obj, w = best
    return LinearModel(w, 0.0, RKSVM, {"C": C, "epochs": epochs}, metrics={"eval": obj})


def fit_rank_lp(data: RankingSet, l1: float = DEFAULTS[RKLP]["l1"], epochs: int = DEFAULT_EPOCHS,
                eta0: float = DEFAULT_ETA0) -> LinearModel:
    """min sum xi + l1 ||w||_1  s.t.  w.x_worse - w.x_better >= 1 - xi, xi >= 0.

    Solved on the equivalent hinge + L1 objective with proximal subgradient steps.
    """
    if l1 < 0:
        raise ValueError("l1 weight must be non-negative")
    Z = data.differences()
    w = np.zeros(data.X.shape[1])
    best = (rank_lp_objective(Z, w, l1), w.copy())
    if len(Z):
        for t in range(1, epochs + 1):
            eta = eta0 / math.sqrt(t)
            active = Z @ w < 1.0
            w = w + eta * Z[active].sum(axis=0)
            w = np.sign(w) * np.maximum(0.0, np.abs(w) - eta * l1)
            obj = rank_lp_objective(Z, w, l1)
            if obj < best[0]:
                best = (obj, w.copy())
    obj, w = best
    slack = float(np.maximum(0.0, 1.0 - Z @ w).sum()) if len(Z) else 0.0
    return LinearModel(w, 0.0, RKLP, {"l1": l1, "epochs": epochs}, metrics={"eval": obj, "slack": slack})


def fit(optimiser: str, data, **params) -> LinearModel:
    """Dispatch by optimiser name with the recorded defaults."""
    optimiser = optimiser.lower()
    if optimiser not in OPTIMISERS:
        raise ValueError(f"unknown optimiser {optimiser!r}")
    kwargs = {**DEFAULTS[optimiser], **params}
    start = time.perf_counter()
    model = {
        LASSO: fit_lasso, GPR: fit_gpr, SVR: fit_svr, RKSVM: fit_rank_svm, RKLP: fit_rank_lp,
    }[optimiser](data, **kwargs)
    model.metrics["time_seconds"] = time.perf_counter() - start
    return model


# --------------------------------------------------------------------------
# persistence


def _decimal(value: float) -> str:
    return repr(float(value))


def model_to_dict(model: LinearModel) -> dict:
    metrics = {"eval": float(model.metrics.get("eval", float("nan"))), "size": model.size}
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "optimiser": model.optimiser,
        "hyperparameters": model.hyperparameters,
        "converged": model.converged,
        "bias": _decimal(model.bias),
        "weights": [_decimal(v) for v in model.weights],
        "metrics": {k: _decimal(v) if isinstance(v, float) else v for k, v in metrics.items()},
        "feature_index": list(model.index.colours) if model.index is not None else None,
        "colour_table": model.table.to_dict() if model.table is not None else None,
    }


def model_from_dict(data: dict) -> LinearModel:
    if not isinstance(data, dict) or data.get("format") != MODEL_FORMAT:
        raise ModelFileError("not a model file")
    if data.get("version") != MODEL_VERSION:
        raise ModelFileError(f"unsupported model version {data.get('version')!r} (expected {MODEL_VERSION})")
    try:
        table = ColourTable.from_dict(data["colour_table"]) if data["colour_table"] is not None else None
        index = FeatureIndex(tuple(data["feature_index"])) if data["feature_index"] is not None else None
        metrics = {k: float(v) if isinstance(v, str) else v for k, v in data["metrics"].items()}
        return LinearModel(
            np.array([float(v) for v in data["weights"]], dtype=np.float64),
            float(data["bias"]), data["optimiser"], data["hyperparameters"],
            table, index, metrics, bool(data["converged"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFileError(f"corrupt model file: {exc}") from exc


def dumps_model(model: LinearModel) -> str:
    return json.dumps(model_to_dict(model), sort_keys=True, indent=1) + "\n"


def save_model(model: LinearModel, path) -> None:
    """Write the model; training wall time is deliberately left out so files are reproducible."""
    with open(path, "w", encoding="utf-8") as f:
        f.write(dumps_model(model))


def load_model(path) -> LinearModel:
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as exc:
        raise ModelFileError(f"corrupt model file: {exc}") from exc
    return model_from_dict(data)
