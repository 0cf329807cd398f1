"""Self-checks against independent analytic oracles."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError
from .evaluation import compute_metrics
from .regressors import mlp_gradients, mlp_loss, predict_bayesian, train_bayesian
from .regressors.mlp import init_mlp
from .sim import ChannelParams, Point3, first_passage_probability, reflect_off_vessel, simulate_channel


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def first_passage_setup(n_molecules: int = 10_000, seed: int = 1) -> ChannelParams:
    """Near-point transmitter 10 units from the centre of a radius-5 receiver, wall far away."""
    r_t, r_r = 0.01, 5.0
    return ChannelParams(r_t=r_t, r_r=r_r, d=10.0 - r_t - r_r, diff=100.0,
                         n_molecules=n_molecules, n_steps=3000, dt=0.01, seed=seed, r_v=1000.0)


def first_passage_tolerance(p: float, n_molecules: int) -> float:
    """0.03 allowance for time discretisation plus four binomial standard errors."""
    return 0.03 + 4.0 * math.sqrt(p * (1.0 - p) / n_molecules)


def check_first_passage(n_molecules=10_000, scale=1.0) -> CheckResult:
    params = first_passage_setup(n_molecules)
    expected = first_passage_probability(10.0, params.r_r, params.diff, params.n_steps * params.dt)
    got = simulate_channel(params).absorbed_fraction
    tol = scale * first_passage_tolerance(expected, n_molecules)
    return CheckResult("first-passage", abs(got - expected) <= tol,
                       f"absorbed {got:.4f}, analytic {expected:.4f}, tolerance {tol:.4f}")


def check_bayesian(scale=1.0) -> CheckResult:
    post = train_bayesian([[1.0]], [1.0], [0.0], [[1.0]], 1.0)
    mean, var = predict_bayesian(post, [1.0])
    got = (float(post.mean[0]), float(post.covariance[0, 0]), mean, var)
    want = (0.5, 0.5, 0.5, 1.5)
    err = max(abs(g - w) for g, w in zip(got, want))
    return CheckResult("bayesian-closed-form", err <= 1e-10 * scale, f"max abs error {err:.2e}")


def check_gradients(points=10, scale=1.0) -> CheckResult:
    rng = np.random.default_rng(3)
    worst = 0.0
    for k in range(points):
        model = init_mlp(4, 6, "sigmoid", seed=k)
        model.W1 += rng.normal(0, 0.5, model.W1.shape)
        model.b1 += rng.normal(0, 0.5, model.b1.shape)
        X = rng.random((3, 4))
        y = rng.random(3)
        worst = max(worst, gradient_check(model, X, y))
    return CheckResult("mlp-gradient", worst < 1e-4 * scale, f"max relative error {worst:.2e}")


def gradient_check(model, X, y, h=1e-5) -> float:
    """Largest relative gap between analytic and central-difference gradients."""
    grads = mlp_gradients(model, X, y)
    worst = 0.0
    for name, g in grads.items():
        g = np.atleast_1d(g)
        for i in range(g.size):
            def loss_at(delta):
                if name == "b2":
                    old = model.b2
                    model.b2 = old + delta
                    v = mlp_loss(model, X, y)
                    model.b2 = old
                    return v
                arr = getattr(model, name)
                flat = arr.reshape(-1)
                old = flat[i]
                flat[i] = old + delta
                v = mlp_loss(model, X, y)
                flat[i] = old
                return v

            numeric = (loss_at(h) - loss_at(-h)) / (2 * h)
            analytic = g.reshape(-1)[i]
            denom = max(abs(numeric), abs(analytic), 1e-8)
            worst = max(worst, abs(numeric - analytic) / denom)
    return worst


def check_cod_identity(scale=1.0) -> CheckResult:
    rng = np.random.default_rng(11)
    a = rng.normal(size=1000)
    p = a + rng.normal(scale=0.3, size=1000)
    rep = compute_metrics(a, p)
    independent = 1.0 - np.sum((p - a) ** 2) / np.sum((a - a.mean()) ** 2)
    err = max(abs(rep.cod - (1 - rep.rse)), abs(rep.cod - independent))
    ok = err <= 1e-12 * scale and rep.mae <= rep.rmse
    return CheckResult("cod-identity", ok, f"max deviation {err:.2e}")


def check_reflection(scale=1.0) -> CheckResult:
    sol = reflect_off_vessel(Point3(8, 2, 0), Point3(9, 6, 0), 10.0)
    on_circle = abs(math.hypot(sol.intersection.x, sol.intersection.y) - 10.0) / 10.0
    ref = sol.reflected
    err = max(abs(ref.x - 8.4452), abs(ref.y - 3.7808), abs(ref.z))
    radial = reflect_off_vessel(Point3(0, 0, 0), Point3(12, 0, 3), 10.0).reflected
    err_r = max(abs(radial.x - 8), abs(radial.y), abs(radial.z - 3))
    ok = on_circle <= 1e-9 * scale and err <= 1e-4 * scale and err_r <= 1e-12 * scale
    return CheckResult("reflection", ok, f"circle {on_circle:.1e}, oblique {err:.1e}, radial {err_r:.1e}")


def run_checks(fast: bool = False, tolerance_scale: float = 1.0) -> list[CheckResult]:
    if not (math.isfinite(tolerance_scale) and tolerance_scale > 0):
        raise InvalidParameterError(f"tolerance scale must be positive, got {tolerance_scale!r}")
    n = 2_000 if fast else 10_000
    return [
        check_first_passage(n, tolerance_scale),
        check_bayesian(tolerance_scale),
        check_gradients(3 if fast else 10, tolerance_scale),
        check_cod_identity(tolerance_scale),
        check_reflection(tolerance_scale),
    ]
