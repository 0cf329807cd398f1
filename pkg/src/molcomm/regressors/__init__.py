"""Surrogate regressors for the mAP dataset.

:func:`fit_model` trains any model by its short tag, :func:`predict` gives a
point prediction for any trained model and :func:`save_model` /
:func:`load_model` store models as JSON documents of the form
``{"format": "molcomm-model", "version": 1, "kind": <tag>, ...}``.
"""

from __future__ import annotations

import json

import numpy as np

from ..errors import InvalidParameterError, ParseError, ShapeError
from .bayes import BayesianPosterior, predict_bayesian, train_bayesian
from .linear import LinearModel, train_linear_ols, train_linear_sgd
from .mlp import MLPModel, mlp_gradients, mlp_loss, train_mlp
from .scaling import MinMaxScaler
from .trees import (
    ForestModel,
    GBTModel,
    RegressionTree,
    gini_impurity,
    gini_split_score,
    train_forest,
    train_gbt,
    train_tree,
)

MODEL_KINDS = ("ols", "sgd", "bayes", "mlp", "forest", "gbt")

MODEL_NAMES = {
    "ols": "Linear regression (OLS)",
    "sgd": "Linear regression (online GD)",
    "bayes": "Bayesian linear regression",
    "mlp": "Neural network",
    "forest": "Decision forest regression",
    "gbt": "Boosted decision tree",
}

# Defaults follow the usual settings of hosted ML studio regressors.
DEFAULTS = {
    "ols": {"l2": 0.001},
    "sgd": {"l2": 0.001, "lr": 0.1, "epochs": 100, "seed": 0},
    "bayes": {"prior_variance": 1.0, "noise_variance": None},
    "mlp": {"hidden": 100, "activation": "sigmoid", "lr": 0.005, "epochs": 100, "seed": 0},
    "forest": {"trees": 8, "max_depth": 32, "min_leaf": 1, "bagging": 1.0, "seed": 0},
    "gbt": {"trees": 100, "shrinkage": 0.2, "max_leaves": 20, "min_leaf": 10, "seed": 0},
}


def fit_model(kind: str, X, y, **params):
    """Train the model named by ``kind``; unknown keyword arguments are rejected."""
    if kind not in MODEL_KINDS:
        raise InvalidParameterError(f"unknown model {kind!r}; choose from {', '.join(MODEL_KINDS)}")
    unknown = set(params) - set(DEFAULTS[kind])
    if unknown:
        raise InvalidParameterError(f"model {kind!r} does not take {sorted(unknown)}")
    p = {**DEFAULTS[kind], **{k: v for k, v in params.items() if v is not None}}
    if kind == "ols":
        return train_linear_ols(X, y, p["l2"])
    if kind == "sgd":
        return train_linear_sgd(X, y, p["l2"], p["lr"], p["epochs"], p["seed"])
    if kind == "bayes":
        width = np.shape(X)[1] + 1
        S0 = p["prior_variance"] * np.eye(width)
        return train_bayesian(X, y, None, S0, p["noise_variance"], fit_intercept=True, scale=True)
    if kind == "mlp":
        return train_mlp(X, y, p["hidden"], p["activation"], p["lr"], p["epochs"], p["seed"])
    if kind == "forest":
        return train_forest(X, y, p["trees"], p["bagging"], max_depth=p["max_depth"],
                            min_samples_leaf=p["min_leaf"], seed=p["seed"])
    return train_gbt(X, y, p["trees"], p["shrinkage"], max_leaves=p["max_leaves"],
                     min_samples_leaf=p["min_leaf"], seed=p["seed"])


def predict(model, x):
    """Point prediction (the predictive mean for probabilistic models).

    A 1-D ``x`` gives a float, a 2-D batch gives an array.
    """
    if np.shape(x)[-1] != model.n_features:
        raise ShapeError(f"model expects {model.n_features} features, got {np.shape(x)[-1]}")
    return model.predict(x)


def is_probabilistic(model) -> bool:
    return hasattr(model, "predict_dist") and not isinstance(model, RegressionTree)


# -- serialisation -----------------------------------------------------------

def _arr(a):
    return np.asarray(a).tolist()


def _scaler_dict(s):
    return None if s is None else s.to_dict()


def _scaler_from(d):
    return None if d is None else MinMaxScaler.from_dict(d)


def _tree_dict(t: RegressionTree) -> dict:
    return {
        "feature": _arr(t.feature), "threshold": _arr(t.threshold),
        "left": _arr(t.left), "right": _arr(t.right),
        "value": _arr(t.value), "variance": _arr(t.variance), "count": _arr(t.count),
        "n_features": t.n_features, "criterion": t.criterion,
    }


def _tree_from(d) -> RegressionTree:
    return RegressionTree(
        np.array(d["feature"], dtype=np.int64), np.array(d["threshold"], dtype=float),
        np.array(d["left"], dtype=np.int64), np.array(d["right"], dtype=np.int64),
        np.array(d["value"], dtype=float), np.array(d["variance"], dtype=float),
        np.array(d["count"], dtype=np.int64), int(d["n_features"]), d["criterion"],
    )


def model_to_dict(model) -> dict:
    if isinstance(model, LinearModel):
        body = {
            "kind": "ols" if model.solver == "ols" else "sgd",
            "weights": _arr(model.weights), "intercept": model.intercept,
            "solver": model.solver, "l2_weight": model.l2_weight,
            "learning_rate": model.learning_rate, "scaler": _scaler_dict(model.scaler),
        }
    elif isinstance(model, BayesianPosterior):
        body = {
            "kind": "bayes", "mean": _arr(model.mean), "covariance": _arr(model.covariance),
            "noise_variance": model.noise_variance, "prior_mean": _arr(model.prior_mean),
            "prior_covariance": _arr(model.prior_covariance),
            "fit_intercept": model.fit_intercept, "scaler": _scaler_dict(model.scaler),
        }
    elif isinstance(model, MLPModel):
        body = {
            "kind": "mlp", "W1": _arr(model.W1), "b1": _arr(model.b1), "w2": _arr(model.w2),
            "b2": model.b2, "activation": model.activation, "learning_rate": model.learning_rate,
            "epochs": model.epochs, "seed": model.seed, "scaler": _scaler_dict(model.scaler),
        }
    elif isinstance(model, ForestModel):
        body = {
            "kind": "forest", "trees": [_tree_dict(t) for t in model.trees],
            "tree_seeds": [str(s) for s in model.tree_seeds],
            "bagging_fraction": model.bagging_fraction, "replace": model.replace,
            "min_variance": model.min_variance,
        }
    elif isinstance(model, GBTModel):
        body = {
            "kind": "gbt", "f0": model.f0, "trees": [_tree_dict(t) for t in model.trees],
            "shrinkage": model.shrinkage, "n_features": model.n_features, "loss": model.loss,
        }
    elif isinstance(model, RegressionTree):
        body = {"kind": "tree", **_tree_dict(model)}
    else:
        raise TypeError(f"cannot serialise {type(model).__name__}")
    return {"format": "molcomm-model", "version": 1, **body}


def model_from_dict(d: dict):
    if d.get("format") != "molcomm-model":
        raise ParseError("not a molcomm model document")
    kind = d.get("kind")
    try:
        if kind in ("ols", "sgd"):
            return LinearModel(
                np.array(d["weights"], dtype=float), d["intercept"], d["solver"],
                d["l2_weight"], d["learning_rate"], _scaler_from(d["scaler"]),
            )
        if kind == "bayes":
            return BayesianPosterior(
                np.array(d["mean"], dtype=float), np.array(d["covariance"], dtype=float),
                d["noise_variance"], np.array(d["prior_mean"], dtype=float),
                np.array(d["prior_covariance"], dtype=float), d["fit_intercept"],
                _scaler_from(d["scaler"]),
            )
        if kind == "mlp":
            return MLPModel(
                np.array(d["W1"], dtype=float), np.array(d["b1"], dtype=float),
                np.array(d["w2"], dtype=float), d["b2"], d["activation"],
                d["learning_rate"], d["epochs"], d["seed"], _scaler_from(d["scaler"]),
            )
        if kind == "forest":
            return ForestModel(
                [_tree_from(t) for t in d["trees"]], [int(s) for s in d["tree_seeds"]],
                d["bagging_fraction"], d["replace"], d["min_variance"],
            )
        if kind == "gbt":
            return GBTModel(d["f0"], [_tree_from(t) for t in d["trees"]], d["shrinkage"],
                            d["n_features"], d["loss"])
        if kind == "tree":
            return _tree_from(d)
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed {kind} model: {exc}") from None
    raise ParseError(f"unknown model kind {kind!r}")


def dumps_model(model) -> str:
    return json.dumps(model_to_dict(model), indent=1, sort_keys=True) + "\n"


def loads_model(text: str):
    try:
        return model_from_dict(json.loads(text))
    except json.JSONDecodeError as exc:
        raise ParseError(str(exc), exc.lineno) from None


def save_model(model, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps_model(model))


def load_model(path):
    with open(path) as fh:
        return loads_model(fh.read())


__all__ = [
    "BayesianPosterior", "ForestModel", "GBTModel", "LinearModel", "MLPModel",
    "MODEL_KINDS", "MODEL_NAMES", "MinMaxScaler", "RegressionTree", "dumps_model",
    "fit_model", "gini_impurity", "gini_split_score", "is_probabilistic", "load_model",
    "loads_model", "mlp_gradients", "mlp_loss", "model_from_dict", "model_to_dict",
    "predict", "predict_bayesian", "save_model", "train_bayesian", "train_forest",
    "train_gbt", "train_linear_ols", "train_linear_sgd", "train_mlp", "train_tree",
]
