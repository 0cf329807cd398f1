import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from molcomm.errors import InvalidParameterError
from molcomm.regressors import predict_bayesian, train_bayesian, train_linear_ols


def test_one_dimensional_example():
    # S = (1 + 1)^-1 = 1/2, mu = S * 1 = 1/2, predictive variance 1 + 1/2
    post = train_bayesian([[1.0]], [1.0], [0.0], [[1.0]], 1.0)
    assert abs(post.mean[0] - 0.5) <= 1e-10
    assert abs(post.covariance[0, 0] - 0.5) <= 1e-10
    mean, var = predict_bayesian(post, [1.0])
    assert abs(mean - 0.5) <= 1e-10
    assert abs(var - 1.5) <= 1e-10


def test_no_data_returns_prior():
    m0, S0 = np.array([0.3, -0.2]), np.array([[2.0, 0.5], [0.5, 1.0]])
    post = train_bayesian(np.empty((0, 2)), np.empty(0), m0, S0, 0.7)
    np.testing.assert_array_equal(post.mean, m0)
    np.testing.assert_array_equal(post.covariance, S0)


def test_matches_direct_inverse():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(20, 3))
    y = rng.normal(size=20)
    m0 = rng.normal(size=3)
    A = rng.normal(size=(3, 3))
    S0 = A @ A.T + np.eye(3)
    s2 = 0.4
    post = train_bayesian(X, y, m0, S0, s2)
    S = np.linalg.inv(np.linalg.inv(S0) + X.T @ X / s2)
    mu = S @ (np.linalg.inv(S0) @ m0 + X.T @ y / s2)
    np.testing.assert_allclose(post.covariance, S, rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(post.mean, mu, rtol=1e-10, atol=1e-12)


def test_weak_prior_matches_ols():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(100, 3))
    y = X @ [1.0, -2.0, 0.5] + rng.normal(scale=0.2, size=100)
    post = train_bayesian(X, y, None, 1e8 * np.eye(3), 0.04)
    ols, *_ = np.linalg.lstsq(X, y, rcond=None)
    np.testing.assert_allclose(post.mean, ols, rtol=1e-3)


def test_strong_prior_pins_mean():
    post = train_bayesian([[1.0], [2.0]], [5.0, 9.0], [0.25], [[1e-12]], 1.0)
    assert post.mean[0] == pytest.approx(0.25, abs=1e-9)


def test_intercept_and_scaling():
    rng = np.random.default_rng(2)
    X = rng.uniform(0, 10, size=(200, 2))
    y = 0.3 * X[:, 0] - 0.1 * X[:, 1] + 2.0
    post = train_bayesian(X, y, None, 1e6 * np.eye(3), 1e-6, fit_intercept=True, scale=True)
    np.testing.assert_allclose(post.predict(X), y, atol=1e-4)
    assert post.n_features == 2


@pytest.mark.parametrize("S0", [[[1.0, 2.0], [0.0, 1.0]], [[1.0, 0.0], [0.0, -1.0]]])
def test_bad_prior(S0):
    with pytest.raises(InvalidParameterError):
        train_bayesian([[1.0, 2.0]], [1.0], None, S0, 1.0)


def test_bad_noise():
    with pytest.raises(InvalidParameterError):
        train_bayesian([[1.0]], [1.0], None, None, 0.0)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 15), seed=st.integers(0, 10_000))
def test_posterior_variance_never_exceeds_prior(n, seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 2))
    y = rng.normal(size=n)
    S0 = np.diag([2.0, 3.0])
    post = train_bayesian(X, y, None, S0, 0.5)
    assert np.all(np.linalg.eigvalsh(S0 - post.covariance) >= -1e-10)
    assert np.all(np.linalg.eigvalsh(post.covariance) > 0)
    _, var = post.predict_dist(X)
    assert np.all(var >= 0.5)
