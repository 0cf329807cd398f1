"""One-hidden-layer regression network trained by per-sample backpropagation.

``o = w2 . act(W1 x + b1) + b2`` with a linear output unit and squared loss.
The output-layer update ``w2 <- w2 + lr * (t - o) * h`` is the delta rule
applied to the hidden activations ``h``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DivergenceError, InvalidParameterError
from ..seeding import make_rng
from ._common import as_rows, check_xy
from .scaling import MinMaxScaler


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _sigmoid_grad(z, a):
    return a * (1.0 - a)


def _tanh_grad(z, a):
    return 1.0 - a * a


def _relu_grad(z, a):
    return (z > 0).astype(float)


ACTIVATIONS = {
    "sigmoid": (_sigmoid, _sigmoid_grad),
    "tanh": (np.tanh, _tanh_grad),
    "relu": (lambda z: np.maximum(z, 0.0), _relu_grad),
}


@dataclass(eq=False)
class MLPModel:
    W1: np.ndarray  # (hidden, inputs)
    b1: np.ndarray  # (hidden,)
    w2: np.ndarray  # (hidden,)
    b2: float
    activation: str = "sigmoid"
    learning_rate: float = 0.005
    epochs: int = 0
    seed: int = 0
    scaler: MinMaxScaler | None = None
    loss_history: list = field(default_factory=list)

    kind = "mlp"

    @property
    def n_features(self) -> int:
        return self.W1.shape[1]

    @property
    def hidden_units(self) -> int:
        return self.W1.shape[0]

    def params(self) -> dict:
        return {"W1": self.W1, "b1": self.b1, "w2": self.w2, "b2": np.array(self.b2)}

    def forward(self, X):
        act, _ = ACTIVATIONS[self.activation]
        z = X @ self.W1.T + self.b1
        h = act(z)
        return z, h, h @ self.w2 + self.b2

    def predict(self, X):
        X, single = as_rows(X, self.n_features)
        if self.scaler is not None:
            X = self.scaler.transform(X)
        out = self.forward(X)[2]
        return float(out[0]) if single else out


def init_mlp(n_inputs: int, hidden_units: int, activation: str = "sigmoid", seed: int = 0) -> MLPModel:
    """Glorot-uniform weights, zero biases."""
    if hidden_units < 1:
        raise InvalidParameterError(f"hidden_units must be >= 1, got {hidden_units!r}")
    if activation not in ACTIVATIONS:
        raise InvalidParameterError(f"unknown activation {activation!r}; choose from {sorted(ACTIVATIONS)}")
    rng = make_rng(seed)
    lim1 = np.sqrt(6.0 / (n_inputs + hidden_units))
    lim2 = np.sqrt(6.0 / (hidden_units + 1))
    W1 = rng.uniform(-lim1, lim1, size=(hidden_units, n_inputs))
    w2 = rng.uniform(-lim2, lim2, size=hidden_units)
    return MLPModel(W1, np.zeros(hidden_units), w2, 0.0, activation, seed=seed)


def mlp_loss(model: MLPModel, X, y) -> float:
    """Mean of ``0.5 * (o - y)^2`` over the batch (features already scaled)."""
    r = model.forward(np.asarray(X, dtype=float))[2] - np.asarray(y, dtype=float)
    return float(0.5 * np.mean(r * r))


def mlp_gradients(model: MLPModel, X, y) -> dict:
    """Analytic gradient of :func:`mlp_loss` with respect to every parameter."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    _, dact = ACTIVATIONS[model.activation]
    z, h, o = model.forward(X)
    n = X.shape[0]
    delta_out = (o - y) / n
    grad_w2 = h.T @ delta_out
    grad_b2 = np.array(delta_out.sum())
    delta_hidden = np.outer(delta_out, model.w2) * dact(z, h)
    return {
        "W1": delta_hidden.T @ X,
        "b1": delta_hidden.sum(axis=0),
        "w2": grad_w2,
        "b2": grad_b2,
    }


def train_mlp(X, y, hidden_units: int = 100, activation: str = "sigmoid",
              learning_rate: float = 0.005, epochs: int = 100, seed: int = 0,
              scale: bool = True) -> MLPModel:
    X, y = check_xy(X, y)
    if epochs < 0:
        raise InvalidParameterError(f"epochs must be >= 0, got {epochs!r}")
    if not learning_rate >= 0:
        raise InvalidParameterError(f"learning_rate must be >= 0, got {learning_rate!r}")
    model = init_mlp(X.shape[1], hidden_units, activation, seed)
    model.learning_rate = float(learning_rate)
    model.scaler = MinMaxScaler.fit(X) if scale else None
    Xs = model.scaler.transform(X) if scale else X
    act, dact = ACTIVATIONS[activation]
    # shuffling stream is independent of the initialisation stream
    rng = make_rng(seed ^ 0x5DEECE66D)
    with np.errstate(over="ignore", invalid="ignore"):
        _sgd_epochs(model, Xs, y, act, dact, learning_rate, epochs, rng)
    model.epochs = int(epochs)
    return model


def _sgd_epochs(model, Xs, y, act, dact, learning_rate, epochs, rng):
    W1, b1, w2 = model.W1, model.b1, model.w2
    b2 = model.b2
    for epoch in range(epochs):
        for i in rng.permutation(len(y)):
            x = Xs[i]
            z = W1 @ x + b1
            h = act(z)
            err = y[i] - (h @ w2 + b2)
            back = err * w2 * dact(z, h)
            w2 += learning_rate * err * h
            b2 += learning_rate * err
            W1 += learning_rate * np.outer(back, x)
            b1 += learning_rate * back
        model.b2 = float(b2)
        loss = mlp_loss(model, Xs, y)
        if not np.isfinite(loss):
            raise DivergenceError(f"loss became non-finite in epoch {epoch}")
        model.loss_history.append(loss)
    model.b2 = float(b2)
