"""Conjugate Bayesian linear regression with known noise variance.

Prior ``w ~ N(m0, S0)``, likelihood ``y | w ~ N(Xw, sigma^2 I)``. The posterior
is ``N(mu, S)`` with

    S^-1 = S0^-1 + X^T X / sigma^2
    mu   = S (S0^-1 m0 + X^T y / sigma^2)

and the predictive at ``x`` is ``N(mu.x, sigma^2 + x^T S x)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from ..errors import InvalidParameterError
from ._common import as_rows, check_xy
from .scaling import MinMaxScaler


@dataclass(eq=False)
class BayesianPosterior:
    mean: np.ndarray
    covariance: np.ndarray
    noise_variance: float
    prior_mean: np.ndarray
    prior_covariance: np.ndarray
    fit_intercept: bool = False
    scaler: MinMaxScaler | None = None

    kind = "bayes"

    @property
    def n_features(self) -> int:
        return self.mean.shape[0] - int(self.fit_intercept)

    def _design(self, X):
        if self.scaler is not None:
            X = self.scaler.transform(X)
        if self.fit_intercept:
            X = np.hstack([X, np.ones((X.shape[0], 1))])
        return X

    def predict_dist(self, X):
        X, single = as_rows(X, self.n_features)
        Phi = self._design(X)
        mean = Phi @ self.mean
        var = self.noise_variance + np.einsum("ij,jk,ik->i", Phi, self.covariance, Phi)
        if single:
            return float(mean[0]), float(var[0])
        return mean, var

    def predict(self, X):
        return self.predict_dist(X)[0]


def _cholesky(M, what):
    try:
        return linalg.cho_factor(M, lower=True)
    except linalg.LinAlgError:
        raise InvalidParameterError(f"{what} is not positive definite") from None


def ols_noise_variance(Phi, y) -> float:
    """Unbiased residual variance of an unregularised least-squares fit."""
    coef, *_ = np.linalg.lstsq(Phi, y, rcond=None)
    resid = y - Phi @ coef
    dof = max(len(y) - Phi.shape[1], 1)
    return max(float(resid @ resid) / dof, np.finfo(float).eps)


def train_bayesian(X, y, m0=None, S0=None, noise_variance=None, *,
                   fit_intercept: bool = False, scale: bool = False) -> BayesianPosterior:
    """Posterior over the weights.

    ``m0`` defaults to zeros and ``S0`` to the identity. ``noise_variance=None``
    uses the residual variance of an ordinary least-squares fit.
    """
    X, y = check_xy(X, y)
    scaler = MinMaxScaler.fit(X) if scale and len(y) else None
    Phi = scaler.transform(X) if scaler is not None else X
    if fit_intercept:
        Phi = np.hstack([Phi, np.ones((Phi.shape[0], 1))])
    p = Phi.shape[1]
    m0 = np.zeros(p) if m0 is None else np.asarray(m0, dtype=float).reshape(p)
    S0 = np.eye(p) if S0 is None else np.asarray(S0, dtype=float).reshape(p, p)
    if not np.allclose(S0, S0.T, rtol=1e-10, atol=0):
        raise InvalidParameterError("prior covariance is not symmetric")
    if noise_variance is None:
        noise_variance = ols_noise_variance(Phi, y) if len(y) else 1.0
    if not noise_variance > 0:
        raise InvalidParameterError(f"noise_variance must be positive, got {noise_variance!r}")

    S0_factor = _cholesky(S0, "prior covariance")
    if len(y) == 0:
        return BayesianPosterior(m0.copy(), S0.copy(), float(noise_variance), m0, S0, fit_intercept, scaler)
    prior_precision = linalg.cho_solve(S0_factor, np.eye(p))
    prior_precision = 0.5 * (prior_precision + prior_precision.T)
    precision = prior_precision + (Phi.T @ Phi) / noise_variance
    rhs = prior_precision @ m0 + (Phi.T @ y) / noise_variance
    factor = _cholesky(precision, "posterior precision")
    mu = linalg.cho_solve(factor, rhs)
    S = linalg.cho_solve(factor, np.eye(p))
    S = 0.5 * (S + S.T)
    return BayesianPosterior(mu, S, float(noise_variance), m0, S0, fit_intercept, scaler)


def predict_bayesian(model: BayesianPosterior, x_new):
    """Predictive ``(mean, variance)`` for one row or a batch of rows."""
    return model.predict_dist(x_new)
