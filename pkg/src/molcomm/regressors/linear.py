"""Linear regression with an unpenalised intercept and an L2 penalty on the weights.

Objective: ``sum_i (y_i - w.x_i - b)^2 + l2_weight * |w|^2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from ..errors import DivergenceError, InvalidParameterError, RankDeficiencyError
from ..seeding import make_rng
from ._common import as_rows, check_xy
from .scaling import MinMaxScaler


@dataclass(eq=False)
class LinearModel:
    weights: np.ndarray
    intercept: float
    solver: str  # "ols" or "sgd"
    l2_weight: float = 0.0
    learning_rate: float | None = None
    scaler: MinMaxScaler | None = None
    loss_history: list = field(default_factory=list)

    kind = "linear"

    @property
    def n_features(self) -> int:
        return self.weights.shape[0]

    def predict(self, X):
        X, single = as_rows(X, self.n_features)
        if self.scaler is not None:
            X = self.scaler.transform(X)
        out = X @ self.weights + self.intercept
        return float(out[0]) if single else out


def train_linear_ols(X, y, l2_weight: float = 0.0) -> LinearModel:
    """Closed-form ridge solve on centred data."""
    X, y = check_xy(X, y)
    if len(y) < 1:
        raise InvalidParameterError("need at least one sample")
    if not l2_weight >= 0:
        raise InvalidParameterError(f"l2_weight must be >= 0, got {l2_weight!r}")
    x_mean = X.mean(axis=0)
    y_mean = y.mean()
    Xc = X - x_mean
    yc = y - y_mean
    p = X.shape[1]
    if l2_weight == 0 and np.linalg.matrix_rank(Xc) < p:
        raise RankDeficiencyError("design matrix is rank deficient; use l2_weight > 0")
    gram = Xc.T @ Xc + l2_weight * np.eye(p)
    w = linalg.solve(gram, Xc.T @ yc, assume_a="pos")
    return LinearModel(w, float(y_mean - x_mean @ w), "ols", float(l2_weight))


def train_linear_sgd(X, y, l2_weight: float = 0.0, learning_rate: float = 0.1,
                     epochs: int = 100, seed: int = 0, scale: bool = True) -> LinearModel:
    """Online gradient descent, one update per sample, shuffled each epoch.

    Per-sample loss is ``0.5 * (pred - y)^2 + 0.5 * l2_weight * |w|^2``.
    """
    X, y = check_xy(X, y)
    if not learning_rate >= 0:
        raise InvalidParameterError(f"learning_rate must be >= 0, got {learning_rate!r}")
    if epochs < 1:
        raise InvalidParameterError(f"epochs must be >= 1, got {epochs!r}")
    scaler = MinMaxScaler.fit(X) if scale else None
    Xs = scaler.transform(X) if scale else X
    rng = make_rng(seed)
    w = np.zeros(X.shape[1])
    b = 0.0
    history = []
    for epoch in range(epochs):
        with np.errstate(over="ignore", invalid="ignore"):
            for i in rng.permutation(len(y)):
                err = Xs[i] @ w + b - y[i]
                w -= learning_rate * (err * Xs[i] + l2_weight * w)
                b -= learning_rate * err
            resid = Xs @ w + b - y
            mse = float(resid @ resid / len(y))
        if not (np.all(np.isfinite(w)) and np.isfinite(b) and np.isfinite(mse)):
            raise DivergenceError(f"parameters diverged in epoch {epoch}")
        history.append(mse)
    return LinearModel(w, float(b), "sgd", float(l2_weight), float(learning_rate), scaler, history)
