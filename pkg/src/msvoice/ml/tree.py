"""Array-backed CART trees.

Splits maximize S_L^2/n_L + S_R^2/n_R (sum of targets S, counts n), which is
variance reduction for regression and, with 0/1 targets, the Gini decrease
for binary classification. Leaves store the mean target.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_random_state

_LEAF = -1


class _TreeArrays:
    __slots__ = ("feature", "threshold", "left", "right", "value")

    def __init__(self):
        self.feature, self.threshold, self.left, self.right, self.value = [], [], [], [], []

    def add(self, value):
        self.feature.append(_LEAF)
        self.threshold.append(np.nan)
        self.left.append(_LEAF)
        self.right.append(_LEAF)
        self.value.append(value)
        return len(self.value) - 1

    def freeze(self):
        return (
            np.asarray(self.feature, dtype=np.intp),
            np.asarray(self.threshold, dtype=np.float64),
            np.asarray(self.left, dtype=np.intp),
            np.asarray(self.right, dtype=np.intp),
            np.asarray(self.value, dtype=np.float64),
        )


def _best_split(X, y, features, min_leaf):
    """Best (feature, threshold, gain) among ``features``; feature -1 if none."""
    n = len(y)
    xs_all = X[:, features]
    order = np.argsort(xs_all, axis=0, kind="stable")
    xs = np.take_along_axis(xs_all, order, axis=0)
    ys = y[order]
    left_sum = np.cumsum(ys, axis=0)[:-1]
    total = left_sum[-1] + ys[-1] if n > 1 else ys.sum(axis=0)
    n_left = np.arange(1, n, dtype=np.float64)[:, None]
    score = left_sum**2 / n_left + (total - left_sum) ** 2 / (n - n_left)
    valid = xs[:-1] < xs[1:]
    if min_leaf > 1:
        valid &= (n_left >= min_leaf) & (n - n_left >= min_leaf)
    score = np.where(valid, score, -np.inf)
    flat = int(np.argmax(score))
    i, k = divmod(flat, score.shape[1])
    gain = score[i, k] - total[k] ** 2 / n
    if not np.isfinite(score[i, k]) or gain <= 1e-12:
        return -1, np.nan, 0.0
    return int(features[k]), 0.5 * (xs[i, k] + xs[i + 1, k]), float(gain)


def build_tree(X, y, max_depth=None, min_samples_split=2, min_samples_leaf=1, max_features=None, rng=None):
    """Grow a tree depth-first; returns (feature, threshold, left, right, value) arrays."""
    n_features = X.shape[1]
    arrays = _TreeArrays()
    root = arrays.add(float(y.mean()))
    stack = [(root, np.arange(len(y)), 0)]
    while stack:
        node, idx, depth = stack.pop()
        yn = y[idx]
        if (
            len(idx) < min_samples_split
            or (max_depth is not None and depth >= max_depth)
            or yn.min() == yn.max()
        ):
            continue
        Xn = X[idx]
        if max_features is None or max_features >= n_features:
            feat, thr, _ = _best_split(Xn, yn, np.arange(n_features), min_samples_leaf)
        else:
            perm = rng.permutation(n_features)
            feat, thr, _ = _best_split(Xn, yn, perm[:max_features], min_samples_leaf)
            if feat < 0:
                # no usable split among the sampled features: look at the rest
                feat, thr, _ = _best_split(Xn, yn, perm[max_features:], min_samples_leaf)
        if feat < 0:
            continue
        go_left = Xn[:, feat] <= thr
        li, ri = idx[go_left], idx[~go_left]
        left = arrays.add(float(y[li].mean()))
        right = arrays.add(float(y[ri].mean()))
        arrays.feature[node] = feat
        arrays.threshold[node] = thr
        arrays.left[node] = left
        arrays.right[node] = right
        stack.append((right, ri, depth + 1))
        stack.append((left, li, depth + 1))
    return arrays.freeze()


def apply_tree(tree, X) -> np.ndarray:
    """Leaf index reached by every row of ``X``."""
    feature, threshold, left, right, _ = tree
    node = np.zeros(len(X), dtype=np.intp)
    rows = np.arange(len(X))
    active = feature[node] != _LEAF
    while active.any():
        r = rows[active]
        nd = node[r]
        go_left = X[r, feature[nd]] <= threshold[nd]
        node[r] = np.where(go_left, left[nd], right[nd])
        active = feature[node] != _LEAF
    return node


class RegressionTree(RegressorMixin, BaseEstimator):
    """Least-squares CART regressor (used by boosting; usable on its own)."""

    def __init__(self, max_depth=None, min_samples_split=2, min_samples_leaf=1, max_features=None, random_state=None):
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.min_samples_leaf = min_samples_leaf
        self.max_features = max_features
        self.random_state = random_state

    def fit(self, X, y):
        X = check_array(X)
        y = np.asarray(y, dtype=np.float64)
        self.tree_ = build_tree(
            X, y, self.max_depth, self.min_samples_split, self.min_samples_leaf,
            self.max_features, check_random_state(self.random_state),
        )
        self.n_features_in_ = X.shape[1]
        return self

    def apply(self, X):
        check_is_fitted(self, "tree_")
        return apply_tree(self.tree_, check_array(X))

    def predict(self, X):
        return self.tree_[4][self.apply(X)]
