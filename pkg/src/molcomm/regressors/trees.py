"""Regression trees with Gaussian leaves, bagged forests and gradient boosting.

Trees are stored as flat node arrays. Internal nodes send ``x[feature] <=
threshold`` to ``left`` and everything else to ``right``; leaves have
``feature == -1``. Every node keeps the mean, population variance and count
of the training targets that reached it.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from ..errors import DivergenceError, InvalidParameterError
from ..seeding import make_rng, stable_mix
from ._common import as_rows, check_xy

CRITERIA = ("variance", "gini")
GINI_CLASSES = 8


def gini_impurity(proportions) -> float:
    p = np.asarray(proportions, dtype=float)
    if p.ndim != 1 or p.size == 0 or np.any(p < 0):
        raise InvalidParameterError("proportions must be a non-empty sequence of non-negative numbers")
    if abs(p.sum() - 1.0) > 1e-9:
        raise InvalidParameterError(f"proportions sum to {p.sum()!r}, not 1")
    return float(1.0 - np.sum(p * p))


def _gini_of_labels(labels) -> float:
    _, counts = np.unique(np.asarray(labels), return_counts=True)
    return gini_impurity(counts / counts.sum())


def gini_split_score(left_labels, right_labels) -> float:
    """Size-weighted mean of the two children's Gini impurities."""
    n1, n2 = len(left_labels), len(right_labels)
    if n1 == 0 or n2 == 0:
        raise InvalidParameterError("both sides of a split must be non-empty")
    n = n1 + n2
    return n1 / n * _gini_of_labels(left_labels) + n2 / n * _gini_of_labels(right_labels)


def quantile_classes(y, n_classes: int = GINI_CLASSES) -> np.ndarray:
    """Bin a continuous target into up to ``n_classes`` quantile classes."""
    edges = np.quantile(y, np.linspace(0, 1, n_classes + 1)[1:-1])
    return np.searchsorted(np.unique(edges), y, side="right")


def variance_reduction(parent, left, right) -> float:
    """Parent population variance minus the size-weighted child variances."""
    parent, left, right = (np.asarray(a, dtype=float) for a in (parent, left, right))
    n = parent.size
    return float(parent.var() - (left.size * left.var() + right.size * right.var()) / n)


@dataclass(eq=False)
class RegressionTree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    variance: np.ndarray
    count: np.ndarray
    n_features: int
    criterion: str = "variance"

    kind = "tree"

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    @property
    def leaves(self) -> np.ndarray:
        return np.flatnonzero(self.feature < 0)

    def apply(self, X) -> np.ndarray:
        """Index of the leaf reached by each row."""
        X, _ = as_rows(X, self.n_features)
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = self.feature[node] >= 0
        while np.any(active):
            idx = np.flatnonzero(active)
            cur = node[idx]
            go_left = X[idx, self.feature[cur]] <= self.threshold[cur]
            node[idx] = np.where(go_left, self.left[cur], self.right[cur])
            active[idx] = self.feature[node[idx]] >= 0
        return node

    def predict_dist(self, X):
        X, single = as_rows(X, self.n_features)
        leaf = self.apply(X)
        mean, var = self.value[leaf], self.variance[leaf]
        if single:
            return float(mean[0]), float(var[0])
        return mean, var

    def predict(self, X):
        return self.predict_dist(X)[0]


def _best_split(X, y, classes, idx, min_samples_leaf, criterion, rng):
    """Best (gain, feature, threshold) over all features for the samples ``idx``."""
    n = idx.size
    yy = y[idx]
    if criterion == "gini":
        onehot = np.eye(GINI_CLASSES)[classes[idx]]
        parent_score = 1.0 - np.sum((onehot.mean(axis=0)) ** 2)
    else:
        parent_score = yy.var()
    best_gain = 0.0
    ties = []
    # valid split after sorted position k-1: left has k samples
    k = np.arange(min_samples_leaf, n - min_samples_leaf + 1)
    if k.size == 0:
        return None
    for f in range(X.shape[1]):
        xs = X[idx, f]
        order = np.argsort(xs, kind="stable")
        xs = xs[order]
        distinct = xs[k - 1] < xs[k]
        if not np.any(distinct):
            continue
        kk = k[distinct]
        if criterion == "gini":
            cum = np.cumsum(onehot[order], axis=0)
            left = cum[kk - 1]
            right = cum[-1] - left
            gl = 1.0 - np.sum((left / kk[:, None]) ** 2, axis=1)
            gr = 1.0 - np.sum((right / (n - kk)[:, None]) ** 2, axis=1)
            child = (kk * gl + (n - kk) * gr) / n
        else:
            ys = yy[order]
            s1 = np.cumsum(ys)
            s2 = np.cumsum(ys * ys)
            ls, lq = s1[kk - 1], s2[kk - 1]
            rs, rq = s1[-1] - ls, s2[-1] - lq
            sse = (lq - ls * ls / kk) + (rq - rs * rs / (n - kk))
            child = np.maximum(sse, 0.0) / n
        gains = parent_score - child
        g = gains.max()
        tol = 1e-12 * max(1.0, abs(parent_score))
        if g > best_gain + tol:
            best_gain = g
            ties = []
        if g >= best_gain - tol and g > tol:
            for j in np.flatnonzero(gains >= g - tol):
                pos = kk[j]
                ties.append((f, 0.5 * (xs[pos - 1] + xs[pos])))
    if not ties:
        return None
    f, thr = ties[0] if len(ties) == 1 else ties[int(rng.integers(len(ties)))]
    return best_gain, f, thr


def train_tree(X, y, max_depth: int | None = None, min_samples_leaf: int = 1,
               criterion: str = "variance", seed: int = 0,
               max_leaves: int | None = None) -> RegressionTree:
    """Greedy best-first tree growth.

    Leaves are expanded in order of their split gain, so ``max_leaves`` keeps
    the most useful splits. ``seed`` only breaks ties between equal-gain splits.
    """
    X, y = check_xy(X, y)
    if criterion not in CRITERIA:
        raise InvalidParameterError(f"criterion must be one of {CRITERIA}, got {criterion!r}")
    if min_samples_leaf < 1:
        raise InvalidParameterError("min_samples_leaf must be >= 1")
    if max_leaves is not None and max_leaves < 1:
        raise InvalidParameterError("max_leaves must be >= 1")
    n = len(y)
    if n < min_samples_leaf or n == 0:
        raise InvalidParameterError(f"need at least {min_samples_leaf} samples, got {n}")
    rng = make_rng(seed)
    classes = quantile_classes(y) if criterion == "gini" else None

    feature, threshold, left, right, value, variance, count = [], [], [], [], [], [], []

    def new_node(idx):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        yy = y[idx]
        value.append(float(yy.mean()))
        variance.append(float(yy.var()))
        count.append(int(idx.size))
        return len(feature) - 1

    heap = []

    def push(node, idx, depth):
        if max_depth is not None and depth >= max_depth:
            return
        split = _best_split(X, y, classes, idx, min_samples_leaf, criterion, rng)
        if split is not None:
            gain, f, thr = split
            heapq.heappush(heap, (-gain, node, f, thr, depth, idx))

    root_idx = np.arange(n)
    push(new_node(root_idx), root_idx, 0)
    n_leaves = 1
    while heap and (max_leaves is None or n_leaves < max_leaves):
        _, node, f, thr, depth, idx = heapq.heappop(heap)
        mask = X[idx, f] <= thr
        li, ri = idx[mask], idx[~mask]
        feature[node] = f
        threshold[node] = float(thr)
        left[node] = new_node(li)
        right[node] = new_node(ri)
        n_leaves += 1
        push(left[node], li, depth + 1)
        push(right[node], ri, depth + 1)

    return RegressionTree(
        np.array(feature, dtype=np.int64), np.array(threshold, dtype=float),
        np.array(left, dtype=np.int64), np.array(right, dtype=np.int64),
        np.array(value, dtype=float), np.array(variance, dtype=float),
        np.array(count, dtype=np.int64), X.shape[1], criterion,
    )


@dataclass(eq=False)
class ForestModel:
    """Bagged trees whose Gaussian leaf predictions are moment-pooled.

    Pooled mean is the average leaf mean; pooled variance is the average of
    ``leaf_variance + leaf_mean^2`` minus the pooled mean squared, floored at
    ``min_variance``.
    """

    trees: list
    tree_seeds: list
    bagging_fraction: float = 1.0
    replace: bool = True
    min_variance: float = 1e-10

    kind = "forest"

    @property
    def n_features(self) -> int:
        return self.trees[0].n_features

    def predict_dist(self, X):
        X, single = as_rows(X, self.n_features)
        means = np.empty((len(self.trees), X.shape[0]))
        second = np.empty_like(means)
        for t, tree in enumerate(self.trees):
            m, v = tree.predict_dist(X)
            means[t] = m
            second[t] = v + m * m
        mean, var = pool_gaussians(means, second - means * means)
        var = np.maximum(var, self.min_variance)
        if single:
            return float(mean[0]), float(var[0])
        return mean, var

    def predict(self, X):
        return self.predict_dist(X)[0]


def pool_gaussians(means, variances):
    """Moment-matched single Gaussian for an equal-weight mixture (axis 0)."""
    means = np.asarray(means, dtype=float)
    variances = np.asarray(variances, dtype=float)
    mean = means.mean(axis=0)
    var = (variances + means * means).mean(axis=0) - mean * mean
    return mean, np.maximum(var, 0.0)


def train_forest(X, y, n_trees: int = 8, bagging_fraction: float = 1.0, *,
                 replace: bool = True, max_depth: int | None = 32,
                 min_samples_leaf: int = 1, max_leaves: int | None = None,
                 criterion: str = "variance", seed: int = 0) -> ForestModel:
    X, y = check_xy(X, y)
    if n_trees < 1:
        raise InvalidParameterError("n_trees must be >= 1")
    if not 0 < bagging_fraction <= 1:
        raise InvalidParameterError(f"bagging_fraction must be in (0, 1], got {bagging_fraction!r}")
    n = len(y)
    m = max(1, int(round(bagging_fraction * n)))
    trees, seeds = [], []
    for t in range(n_trees):
        tree_seed = stable_mix(seed, t)
        rng = make_rng(tree_seed)
        if replace:
            bag = np.sort(rng.integers(0, n, size=m))
        else:
            bag = np.arange(n) if m == n else np.sort(rng.choice(n, size=m, replace=False))
        trees.append(train_tree(X[bag], y[bag], max_depth, min_samples_leaf, criterion,
                                tree_seed, max_leaves))
        seeds.append(tree_seed)
    return ForestModel(trees, seeds, float(bagging_fraction), replace)


@dataclass(eq=False)
class GBTModel:
    """Stagewise additive trees: ``f0 + shrinkage * sum(stage outputs)``."""

    f0: float
    trees: list
    shrinkage: float
    n_features: int
    loss: str = "squared_error"
    train_mse: list = field(default_factory=list)

    kind = "gbt"

    def predict(self, X):
        X, single = as_rows(X, self.n_features)
        out = np.full(X.shape[0], self.f0)
        for tree in self.trees:
            out += self.shrinkage * tree.predict(X)
        return float(out[0]) if single else out


def train_gbt(X, y, n_trees: int = 100, shrinkage: float = 0.2, *,
              max_leaves: int | None = 20, min_samples_leaf: int = 10,
              max_depth: int | None = None, criterion: str = "variance",
              seed: int = 0) -> GBTModel:
    """Gradient boosting on squared loss, where the optimal constant start is the mean."""
    X, y = check_xy(X, y)
    if n_trees < 0:
        raise InvalidParameterError("n_trees must be >= 0")
    if not 0 < shrinkage <= 1:
        raise InvalidParameterError(f"shrinkage must be in (0, 1], got {shrinkage!r}")
    f0 = float(y.mean())
    fitted = np.full(len(y), f0)
    resid = y - fitted
    history = [float(resid @ resid / len(y))]
    trees = []
    for stage in range(n_trees):
        tree = train_tree(X, resid, max_depth, min_samples_leaf, criterion, stable_mix(seed, stage), max_leaves)
        fitted = fitted + shrinkage * tree.predict(X)
        resid = y - fitted
        if not np.all(np.isfinite(resid)):
            raise DivergenceError(f"non-finite residuals at stage {stage}")
        trees.append(tree)
        history.append(float(resid @ resid / len(y)))
    return GBTModel(f0, trees, float(shrinkage), X.shape[1], train_mse=history)
