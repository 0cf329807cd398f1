import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from molcomm.errors import InvalidParameterError, RelativeMetricError
from molcomm.evaluation import (
    ModelSpec,
    compare_models,
    compute_metrics,
    evaluate_model,
    negative_log_likelihood,
    split_dataset,
)
from molcomm.regressors import fit_model
from molcomm.sweep import Dataset


def synthetic(n=120, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.uniform(1, 10, size=(n, 4))
    y = np.clip(0.9 - 0.05 * X[:, 2] + 0.01 * X[:, 1] + rng.normal(0, 0.02, n), 0, 1)
    return Dataset(X, y)


def test_hand_example():
    m = compute_metrics([1, 2, 3], [2, 2, 2])
    got = (m.mae, m.rmse, m.rae, m.rse, m.cod)
    np.testing.assert_allclose(got, (0.6667, 0.8165, 1.0, 1.0, 0.0), atol=1e-4)


def test_perfect_prediction():
    m = compute_metrics([0.1, 0.5, 0.9], [0.1, 0.5, 0.9])
    assert (m.mae, m.rmse, m.rae, m.rse, m.cod) == (0.0, 0.0, 0.0, 0.0, 1.0)


def test_constant_actuals():
    with pytest.raises(RelativeMetricError) as err:
        compute_metrics([1, 1, 1], [1, 2, 3])
    assert err.value.partial.mae == 1.0
    assert math.isnan(err.value.partial.cod)


def test_length_mismatch():
    with pytest.raises(InvalidParameterError):
        compute_metrics([1, 2], [1])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.floats(-100, 100), st.floats(-100, 100)), min_size=2, max_size=50))
def test_identities(pairs):
    a = np.array([p[0] for p in pairs])
    p = np.array([p[1] for p in pairs])
    if np.ptp(a) < 1e-6:
        return
    m = compute_metrics(a, p)
    assert m.cod == 1 - m.rse
    assert m.mae <= m.rmse * (1 + 1e-12) + 1e-300
    assert m.rae >= 0 and m.rse >= 0


def test_mean_predictor():
    rng = np.random.default_rng(0)
    a = rng.normal(size=1000)
    m = compute_metrics(a, np.full(1000, a.mean()))
    assert abs(m.rae - 1) <= 1e-12 and abs(m.rse - 1) <= 1e-12


def test_nll_hand():
    assert negative_log_likelihood([0.0], [0.0], [1.0]) == pytest.approx(0.5 * math.log(2 * math.pi), abs=1e-15)
    assert negative_log_likelihood([0.0], [0.0], [1.0]) == pytest.approx(0.918939, abs=1e-6)
    with pytest.raises(InvalidParameterError):
        negative_log_likelihood([0.0], [0.0], [0.0])


def test_split_sizes_and_determinism():
    ds = synthetic(135)
    train, test = split_dataset(ds, 0.7, seed=4)
    assert (len(train), len(test)) == (94, 41)
    again, _ = split_dataset(ds, 0.7, seed=4)
    assert again == train
    merged = np.sort(np.concatenate([train.y, test.y]))
    np.testing.assert_array_equal(merged, np.sort(ds.y))


def test_split_invalid():
    with pytest.raises(InvalidParameterError):
        split_dataset(synthetic(10), 0.0)


def test_evaluate_probabilistic_has_nll():
    ds = synthetic()
    train, test = split_dataset(ds)
    assert evaluate_model(fit_model("bayes", train.X, train.y), test).nll is not None
    assert evaluate_model(fit_model("gbt", train.X, train.y), test).nll is None


def test_compare_records_failures():
    train, test = split_dataset(synthetic())
    table = compare_models(train, test, [
        ModelSpec("ols"), ModelSpec("gbt"),
        ModelSpec("sgd", {"lr": 1e6, "epochs": 5}, tag="wild"),
    ])
    assert set(table.reports) == {"ols", "gbt"}
    assert "wild" in table.failures
    csv_lines = table.to_csv().splitlines()
    assert csv_lines[0] == "metric,ols,gbt,wild,best"
    assert csv_lines[-1].split(",")[1] == "-"
    assert "failed" in table.to_text()


def test_best_column():
    train, test = split_dataset(synthetic())
    table = compare_models(train, test, ["ols", "bayes"])
    best = table.best()
    cods = {t: table.reports[t].cod for t in ("ols", "bayes")}
    assert best["CoD"] == max(cods, key=cods.get)
    assert best["Negative Log-Likelihood"] == "bayes"
