# %% [markdown]
# # The six regressors on a toy surface
# A smooth decaying target, standing in for mAP against the gap.

# %%
import numpy as np

from molcomm.regressors import MODEL_KINDS, MODEL_NAMES, dumps_model, fit_model, loads_model, train_bayesian
from molcomm.regressors.mlp import init_mlp
from molcomm.validate import gradient_check

# %%
rng = np.random.default_rng(0)
X = rng.uniform([4, 4, 2, 50], [10, 10, 11, 100], size=(200, 4))
y = np.exp(-X[:, 2] / (0.08 * X[:, 3])) * 0.9 + rng.normal(0, 0.01, 200)
y = np.clip(y, 0, 1)

# %%
for kind in MODEL_KINDS:
    model = fit_model(kind, X[:150], y[:150])
    err = model.predict(X[150:]) - y[150:]
    print(f"{MODEL_NAMES[kind]:32s} RMSE {np.sqrt(np.mean(err ** 2)):.4f}")

# %% [markdown]
# ## Bayesian posterior by hand
# One observation, unit prior and unit noise.

# %%
post = train_bayesian([[1.0]], [1.0], [0.0], [[1.0]], 1.0)
print("posterior mean", post.mean, "variance", post.covariance)
print("predictive at x=1", post.predict_dist([1.0]))

# %% [markdown]
# ## Backprop against finite differences

# %%
net = init_mlp(4, 6, "tanh", seed=3)
print("max relative gradient error", gradient_check(net, rng.random((5, 4)), rng.random(5)))

# %% [markdown]
# ## Saving a model
# Models are plain JSON and reload to identical predictions.

# %%
forest = fit_model("forest", X, y, trees=4)
again = loads_model(dumps_model(forest))
print("identical:", np.array_equal(forest.predict(X), again.predict(X)))
print("forest predictive spread", again.predict_dist(X[:3]))
