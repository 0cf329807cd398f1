"""Train/test splitting, regression metrics and multi-model comparison tables.

With ``e_j = a_j - p_j`` and ``abar`` the mean of the actuals:

=====  =====================================================
MAE    mean |e_j|
RMSE   sqrt(mean e_j^2)
RAE    sum |e_j| / sum |a_j - abar|
RSE    sum e_j^2 / sum (a_j - abar)^2
CoD    1 - RSE
=====  =====================================================
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError, RelativeMetricError
from .regressors import MODEL_NAMES, fit_model, is_probabilistic
from .seeding import make_rng
from .sweep import Dataset

DEFAULT_SPLIT_SEED = 20220
METRIC_ROWS = ("MAE", "RMSE", "RAE", "RSE", "CoD", "Negative Log-Likelihood")


def split_dataset(ds: Dataset, train_fraction: float = 0.7, seed: int = DEFAULT_SPLIT_SEED):
    """Seeded shuffle followed by a prefix split of ``floor(fraction * n)`` rows."""
    if not 0 < train_fraction <= 1:
        raise InvalidParameterError(f"train_fraction must be in (0, 1], got {train_fraction!r}")
    if len(ds) == 0:
        raise InvalidParameterError("cannot split an empty dataset")
    order = make_rng(seed).permutation(len(ds))
    n_train = math.floor(train_fraction * len(ds))
    return ds.take(order[:n_train]), ds.take(order[n_train:])


@dataclass
class MetricsReport:
    mae: float
    rmse: float
    rae: float
    rse: float
    cod: float
    nll: float | None = None
    n_test: int = 0
    model_tag: str = ""

    def as_row(self) -> dict:
        return {
            "MAE": self.mae, "RMSE": self.rmse, "RAE": self.rae, "RSE": self.rse,
            "CoD": self.cod, "Negative Log-Likelihood": self.nll,
        }


def _pair(actual, predicted):
    a = np.asarray(actual, dtype=float).reshape(-1)
    p = np.asarray(predicted, dtype=float).reshape(-1)
    if a.shape != p.shape:
        raise InvalidParameterError(f"length mismatch: {a.size} actual vs {p.size} predicted")
    if a.size == 0:
        raise InvalidParameterError("need at least one (actual, predicted) pair")
    return a, p


def compute_metrics(actual, predicted, model_tag: str = "", nll: float | None = None) -> MetricsReport:
    a, p = _pair(actual, predicted)
    e = a - p
    abs_err = np.abs(e).sum()
    sq_err = (e * e).sum()
    mae = abs_err / a.size
    rmse = math.sqrt(sq_err / a.size)
    dev = a - a.mean()
    abs_dev = np.abs(dev).sum()
    sq_dev = (dev * dev).sum()
    if sq_dev == 0:
        partial = MetricsReport(float(mae), rmse, math.nan, math.nan, math.nan, nll, a.size, model_tag)
        raise RelativeMetricError("actual values are constant; RAE, RSE and CoD are undefined", partial)
    rse = float(sq_err / sq_dev)
    return MetricsReport(float(mae), rmse, float(abs_err / abs_dev), rse, 1.0 - rse, nll, a.size, model_tag)


def negative_log_likelihood(actual, means, variances) -> float:
    """Summed Gaussian negative log density of the actuals."""
    a, mu = _pair(actual, means)
    var = np.asarray(variances, dtype=float).reshape(-1)
    if var.shape != a.shape:
        raise InvalidParameterError("variances must match the actual values in length")
    if np.any(~(var > 0)):
        raise InvalidParameterError("predictive variances must be positive")
    r = a - mu
    return float(np.sum(0.5 * np.log(2.0 * math.pi * var) + r * r / (2.0 * var)))


def evaluate_model(model, test: Dataset, model_tag: str = "") -> MetricsReport:
    nll = None
    if is_probabilistic(model):
        mean, var = model.predict_dist(test.X)
        nll = negative_log_likelihood(test.y, mean, var)
        pred = mean
    else:
        pred = model.predict(test.X)
    return compute_metrics(test.y, pred, model_tag or getattr(model, "kind", ""), nll)


@dataclass
class ModelSpec:
    kind: str
    params: dict = field(default_factory=dict)
    tag: str | None = None

    @property
    def label(self) -> str:
        return self.tag or self.kind


@dataclass
class Comparison:
    reports: dict
    failures: dict
    order: list

    def value(self, tag, metric):
        rep = self.reports.get(tag)
        return None if rep is None else rep.as_row()[metric]

    def best(self) -> dict:
        """Best model tag per metric (highest CoD, lowest everything else)."""
        out = {}
        for metric in METRIC_ROWS:
            scored = [(self.value(t, metric), t) for t in self.order]
            scored = [(v, t) for v, t in scored if v is not None and not math.isnan(v)]
            if not scored:
                out[metric] = None
                continue
            if metric == "CoD":
                out[metric] = max(scored, key=lambda s: s[0])[1]
            else:
                out[metric] = min(scored, key=lambda s: s[0])[1]
        return out

    def _cell(self, tag, metric):
        if tag in self.failures:
            return "failed"
        v = self.value(tag, metric)
        return "-" if v is None else f"{v:.6f}"

    def to_text(self) -> str:
        best = self.best()
        header = ["Metric"] + [MODEL_NAMES.get(t, t) for t in self.order] + ["Best"]
        rows = [[m] + [self._cell(t, m) for t in self.order] + [best[m] or "-"] for m in METRIC_ROWS]
        widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]
        lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in [header] + rows]
        for tag, msg in self.failures.items():
            lines.append(f"{tag}: {msg}")
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        best = self.best()
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["metric"] + list(self.order) + ["best"])
        for m in METRIC_ROWS:
            cells = []
            for t in self.order:
                if t in self.failures:
                    cells.append("failed")
                else:
                    v = self.value(t, m)
                    cells.append("-" if v is None else repr(float(v)))
            w.writerow([m] + cells + [best[m] or "-"])
        return buf.getvalue()


def _as_spec(s) -> ModelSpec:
    if isinstance(s, ModelSpec):
        return s
    if isinstance(s, str):
        return ModelSpec(s)
    kind, params = s
    return ModelSpec(kind, dict(params))


def compare_models(train: Dataset, test: Dataset, model_specs) -> Comparison:
    """Train every spec on ``train`` and score it on ``test``.

    A failing model is recorded in ``failures`` and the others still run.
    """
    specs = [_as_spec(s) for s in model_specs]
    if not specs:
        raise InvalidParameterError("need at least one model spec")
    if len(train) == 0 or len(test) == 0:
        raise InvalidParameterError("train and test sets must be non-empty")
    reports, failures, order = {}, {}, []
    for spec in specs:
        label = spec.label
        order.append(label)
        try:
            model = fit_model(spec.kind, train.X, train.y, **spec.params)
            reports[label] = evaluate_model(model, test, label)
        except Exception as exc:  # one bad model must not sink the table
            failures[label] = f"{type(exc).__name__}: {exc}"
    return Comparison(reports, failures, order)
