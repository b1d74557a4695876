"""Regression trees and tree ensembles written on top of numpy.

One greedy grower is shared by two split criteria:

* squared error (classic CART), used by the single tree, bagging, random
  forest, AdaBoost.R2 and gradient boosting;
* second-order gain with L2 leaf shrinkage and a split penalty, used by the
  xgb-like booster.

Split candidates are midpoints between consecutive distinct feature values.
Among candidates whose gain is within a relative 1e-10 of the best one, the
lowest feature index wins, then the lowest threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

KINDS = ("single", "bagging", "random_forest", "adaboost_r2", "gradient_boosting", "xgb_like")
TIE_RTOL = 1e-10


class TreeError(ValueError):
    pass


@dataclass(frozen=True)
class Tree:
    """Flat array tree. ``feature[i] == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    depth: int

    @property
    def n_nodes(self):
        return self.feature.shape[0]

    @property
    def n_leaves(self):
        return int(np.sum(self.feature < 0))

    def apply(self, X) -> np.ndarray:
        """Leaf index reached by every row of ``X``."""
        X = np.asarray(X, dtype=float)
        node = np.zeros(X.shape[0], dtype=np.intp)
        rows = np.arange(X.shape[0])
        for _ in range(self.depth):
            feat = self.feature[node]
            inner = feat >= 0
            if not inner.any():
                break
            r, n, f = rows[inner], node[inner], feat[inner]
            go_left = X[r, f] <= self.threshold[n]
            node[inner] = np.where(go_left, self.left[n], self.right[n])
        return node

    def predict(self, X) -> np.ndarray:
        return self.value[self.apply(X)]


class _SquaredError:
    def __init__(self, y):
        self.y = y

    def leaf_value(self, ids):
        return float(self.y[ids].mean())

    def is_pure(self, ids):
        v = self.y[ids]
        return bool(np.all(v == v[0]))

    def gains(self, ids, order):
        # order: (features, n) sample ids sorted per feature
        n = ids.shape[0]
        c = self.y[order] - self.y[ids].mean()
        cs = np.cumsum(c, axis=1)[:, :-1]
        n_left = np.arange(1, n, dtype=float)
        return cs * cs * (n / (n_left * (n - n_left)))


class _SecondOrder:
    """Squared loss: gradient = prediction - target, hessian = 1."""

    def __init__(self, grad, reg_lambda, gamma):
        self.g = grad
        self.lam = reg_lambda
        self.gamma = gamma

    def leaf_value(self, ids):
        return float(-self.g[ids].sum() / (ids.shape[0] + self.lam))

    def is_pure(self, ids):
        v = self.g[ids]
        return bool(np.all(v == v[0]))

    def gains(self, ids, order):
        n = ids.shape[0]
        lam = self.lam
        total = self.g[ids].sum()
        gl = np.cumsum(self.g[order], axis=1)[:, :-1]
        gr = total - gl
        n_left = np.arange(1, n, dtype=float)
        score = gl * gl / (n_left + lam) + gr * gr / (n - n_left + lam) - total * total / (n + lam)
        return 0.5 * score - self.gamma


def _grow(X, criterion, max_depth, min_samples_split, max_features, rng) -> Tree:
    n_samples, n_features = X.shape
    limit = math.inf if max_depth is None else max_depth
    feats_all = np.arange(n_features)
    presorted = np.argsort(X, axis=0, kind="stable").T

    feature, threshold, left, right, value = [], [], [], [], []
    reached = 0

    def new_node():
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        return len(feature) - 1

    go_left = np.zeros(n_samples, dtype=bool)
    stack = [(new_node(), presorted, 0)]
    while stack:
        node, order, depth = stack.pop()
        ids = order[0]
        n = ids.shape[0]
        value[node] = criterion.leaf_value(ids)
        reached = max(reached, depth)
        if depth >= limit or n < min_samples_split or criterion.is_pure(ids):
            continue

        if max_features is not None and max_features < n_features:
            feats = np.sort(rng.choice(n_features, size=max_features, replace=False))
        else:
            feats = feats_all
        sub = order[feats] if feats is not feats_all else order
        xs = X[sub, feats[:, None]]
        valid = xs[:, 1:] > xs[:, :-1]
        if not valid.any():
            continue
        gains = np.where(valid, criterion.gains(ids, sub), -np.inf)
        best = gains.max()
        if not best > 0:
            continue
        flat = np.flatnonzero(gains.ravel() >= best - TIE_RTOL * abs(best))[0]
        row, pos = divmod(int(flat), n - 1)
        lo, hi = xs[row, pos], xs[row, pos + 1]
        thr = 0.5 * (lo + hi)
        if not lo <= thr < hi:
            thr = lo
        f = int(feats[row])

        go_left[ids] = X[ids, f] <= thr
        mask = go_left[order]
        n_left = int(mask[0].sum())
        left_order = order[mask].reshape(n_features, n_left)
        right_order = order[~mask].reshape(n_features, n - n_left)
        go_left[ids] = False

        feature[node] = f
        threshold[node] = float(thr)
        lid, rid = new_node(), new_node()
        left[node], right[node] = lid, rid
        stack.append((rid, right_order, depth + 1))
        stack.append((lid, left_order, depth + 1))

    return Tree(
        feature=np.array(feature, dtype=np.intp),
        threshold=np.array(threshold, dtype=float),
        left=np.array(left, dtype=np.intp),
        right=np.array(right, dtype=np.intp),
        value=np.array(value, dtype=float),
        depth=reached,
    )


def _check_xy(X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim != 2:
        raise TreeError(f"X must be 2-D, got shape {X.shape}")
    if X.shape[0] == 0 or y.shape[0] == 0:
        raise TreeError("empty data")
    if X.shape[0] != y.shape[0]:
        raise TreeError(f"X has {X.shape[0]} rows but y has {y.shape[0]} values")
    return X, y


def fit_decision_tree(X, y, max_depth=10, max_features=None, min_samples_split=2, rng=None) -> Tree:
    """Greedy CART regression tree minimizing weighted child variance.

    ``max_features`` limits the features examined at each node to a random
    subset of that size (drawn from ``rng``); ``None`` examines all of them.
    ``max_depth=None`` grows until nodes are pure or too small.
    """
    X, y = _check_xy(X, y)
    if max_features is not None and rng is None:
        rng = np.random.default_rng(0)
    return _grow(X, _SquaredError(y), max_depth, min_samples_split, max_features, rng)


def fit_second_order_tree(X, grad, reg_lambda=1.0, gamma=0.0, max_depth=10, min_samples_split=2) -> Tree:
    """Tree on squared-loss gradients; leaves hold ``-G / (H + lambda)``."""
    X, grad = _check_xy(X, grad)
    if reg_lambda < 0 or gamma < 0:
        raise TreeError("lambda and gamma must be non-negative")
    return _grow(X, _SecondOrder(grad, reg_lambda, gamma), max_depth, min_samples_split, None, None)


@dataclass(frozen=True)
class EnsembleParams:
    ntrees: int = 100
    max_depth: int | None = 10
    learning_rate: float = 0.1
    seed: int = 0
    feature_subsample: float | None = None
    reg_lambda: float = 1.0
    gamma: float = 0.0
    bootstrap: bool = True
    min_samples_split: int = 2


@dataclass(frozen=True)
class TreeEnsemble:
    kind: str
    trees: tuple
    n_features: int
    tree_weights: np.ndarray | None = None
    base_score: float = 0.0
    learning_rate: float = 1.0

    def predict(self, X):
        return predict(self, X)


def _tree_rngs(params: EnsembleParams):
    seq = np.random.SeedSequence(params.seed)
    return [np.random.default_rng(s) for s in seq.spawn(params.ntrees)]


def _bootstrap(rng, n, enabled):
    if not enabled:
        return np.arange(n)
    return rng.integers(0, n, size=n)


def _mean_ensemble(kind, X, y, params, max_features):
    X, y = _check_xy(X, y)
    if params.ntrees < 1:
        raise TreeError("ntrees must be >= 1")
    trees = []
    for rng in _tree_rngs(params):
        idx = _bootstrap(rng, X.shape[0], params.bootstrap)
        trees.append(
            fit_decision_tree(X[idx], y[idx], params.max_depth, max_features, params.min_samples_split, rng)
        )
    return TreeEnsemble(kind, tuple(trees), X.shape[1])


def fit_single_tree(X, y, params: EnsembleParams = EnsembleParams(ntrees=1)) -> TreeEnsemble:
    X, y = _check_xy(X, y)
    tree = fit_decision_tree(X, y, params.max_depth, None, params.min_samples_split)
    return TreeEnsemble("single", (tree,), X.shape[1])


def fit_bagging(X, y, params: EnsembleParams) -> TreeEnsemble:
    """Mean of trees grown on bootstrap resamples, all features at every split."""
    return _mean_ensemble("bagging", X, y, params, None)


def forest_feature_count(n_features: int, fraction: float | None) -> int:
    if fraction is None:
        return max(1, math.ceil(n_features / 3))
    if not 0 < fraction <= 1:
        raise TreeError("feature_subsample must lie in (0, 1]")
    return max(1, math.ceil(round(fraction * n_features, 9)))


def fit_random_forest(X, y, params: EnsembleParams) -> TreeEnsemble:
    """Bagging plus a fresh random feature subset at every node (default ceil(p/3))."""
    p = np.asarray(X).shape[1]
    return _mean_ensemble("random_forest", X, y, params, forest_feature_count(p, params.feature_subsample))


def fit_adaboost_r2(X, y, params: EnsembleParams) -> TreeEnsemble:
    """AdaBoost.R2 with linear loss.

    Each round grows a tree on a bootstrap drawn with the current sample
    weights, then shrinks the weights of well-predicted samples by
    ``beta ** (lr * (1 - loss))``. Training stops early on a perfect tree or
    when the weighted average loss reaches 0.5.
    """
    X, y = _check_xy(X, y)
    if params.ntrees < 1:
        raise TreeError("ntrees must be >= 1")
    if params.learning_rate <= 0:
        raise TreeError("learning_rate must be positive")
    n = X.shape[0]
    w = np.full(n, 1.0 / n)
    trees, weights = [], []
    lr = params.learning_rate
    for rng in _tree_rngs(params):
        idx = rng.choice(n, size=n, replace=True, p=w) if params.bootstrap else np.arange(n)
        tree = fit_decision_tree(X[idx], y[idx], params.max_depth, None, params.min_samples_split)
        err = np.abs(tree.predict(X) - y)
        worst = err.max()
        if worst <= 0:
            trees.append(tree)
            weights.append(1.0)
            break
        loss = err / worst
        avg = float(np.dot(w, loss))
        if avg <= 0:
            trees.append(tree)
            weights.append(1.0)
            break
        if avg >= 0.5:
            if not trees:
                trees.append(tree)
                weights.append(1.0)
            break
        beta = avg / (1.0 - avg)
        trees.append(tree)
        weights.append(lr * math.log(1.0 / beta))
        with np.errstate(invalid="ignore", over="ignore"):
            w = w * np.power(beta, lr * (1.0 - loss))
            total = w.sum()
        if not total > 0 or not np.isfinite(total):
            raise TreeError("degenerate weighting")
        w = w / total
    return TreeEnsemble("adaboost_r2", tuple(trees), X.shape[1], tree_weights=np.array(weights))


def fit_gradient_boosting(X, y, params: EnsembleParams) -> TreeEnsemble:
    """Squared-loss boosting: each tree is a CART fit to the current residuals."""
    X, y = _check_xy(X, y)
    if params.ntrees < 0:
        raise TreeError("ntrees must be >= 0")
    base = float(y.mean())
    pred = np.full(y.shape, base)
    lr = params.learning_rate
    trees = []
    for _ in range(params.ntrees):
        tree = fit_decision_tree(X, y - pred, params.max_depth, None, params.min_samples_split)
        pred = pred + lr * tree.predict(X)
        trees.append(tree)
    return TreeEnsemble("gradient_boosting", tuple(trees), X.shape[1], base_score=base, learning_rate=lr)


def fit_xgb_like(X, y, params: EnsembleParams) -> TreeEnsemble:
    """Second-order boosting with L2 leaf shrinkage ``reg_lambda`` and split penalty ``gamma``."""
    X, y = _check_xy(X, y)
    if params.ntrees < 0:
        raise TreeError("ntrees must be >= 0")
    base = float(y.mean())
    pred = np.full(y.shape, base)
    lr = params.learning_rate
    trees = []
    for _ in range(params.ntrees):
        tree = fit_second_order_tree(
            X, pred - y, params.reg_lambda, params.gamma, params.max_depth, params.min_samples_split
        )
        pred = pred + lr * tree.predict(X)
        trees.append(tree)
    return TreeEnsemble("xgb_like", tuple(trees), X.shape[1], base_score=base, learning_rate=lr)


def weighted_median(preds: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Column-wise weighted median of ``preds`` (trees x samples)."""
    preds = np.atleast_2d(preds)
    order = np.argsort(preds, axis=0, kind="stable")
    cum = np.cumsum(np.asarray(weights)[order], axis=0)
    pick = np.argmax(cum >= 0.5 * cum[-1], axis=0)
    cols = np.arange(preds.shape[1])
    return preds[order[pick, cols], cols]


def predict(ensemble: TreeEnsemble, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != ensemble.n_features:
        raise TreeError(f"expected {ensemble.n_features} feature columns, got shape {X.shape}")
    kind = ensemble.kind
    if kind in ("gradient_boosting", "xgb_like"):
        out = np.full(X.shape[0], ensemble.base_score)
        for tree in ensemble.trees:
            out += ensemble.learning_rate * tree.predict(X)
        return out
    if not ensemble.trees:
        raise TreeError("ensemble has no trees")
    preds = np.stack([t.predict(X) for t in ensemble.trees])
    if kind == "adaboost_r2":
        return weighted_median(preds, ensemble.tree_weights)
    return preds.mean(axis=0)


FITTERS = {
    "single": fit_single_tree,
    "bagging": fit_bagging,
    "random_forest": fit_random_forest,
    "adaboost_r2": fit_adaboost_r2,
    "gradient_boosting": fit_gradient_boosting,
    "xgb_like": fit_xgb_like,
}


def fit_ensemble(kind: str, X, y, params: EnsembleParams) -> TreeEnsemble:
    try:
        fitter = FITTERS[kind]
    except KeyError:
        raise TreeError(f"unknown ensemble kind {kind!r}") from None
    return fitter(X, y, params)
