from __future__ import annotations

import numpy as np
from scipy.special import expit

from ._base import BinaryClassifier
from .tree import apply_tree, build_tree


class GradientBoostingClassifier(BinaryClassifier):
    """Gradient boosting of shallow regression trees on the logistic loss.

    Each round fits a depth-``max_depth`` tree to the residuals y - p, then
    replaces its leaf values by one Newton step, sum(residual) / sum(p(1-p)),
    shrunk by ``learning_rate``. Fully deterministic (no subsampling).
    """

    def __init__(self, n_estimators=200, learning_rate=0.1, max_depth=2, min_samples_leaf=1):
        self.n_estimators = n_estimators
        self.learning_rate = learning_rate
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf

    def _fit(self, X, y):
        prior = np.clip(y.mean(), 1e-6, 1 - 1e-6)
        self.init_ = float(np.log(prior / (1 - prior)))
        f = np.full(len(y), self.init_)
        self.estimators_ = []
        for _ in range(self.n_estimators):
            p = expit(f)
            resid = y - p
            feature, threshold, left, right, _ = build_tree(
                X, resid, self.max_depth, 2, self.min_samples_leaf
            )
            leaves = apply_tree((feature, threshold, left, right, None), X)
            hess = np.bincount(leaves, weights=p * (1 - p), minlength=len(feature))
            num = np.bincount(leaves, weights=resid, minlength=len(feature))
            value = np.where(hess > 1e-12, num / np.maximum(hess, 1e-12), 0.0)
            value = self.learning_rate * value
            tree = (feature, threshold, left, right, value)
            self.estimators_.append(tree)
            f += value[leaves]

    def decision_function(self, X):
        f = np.full(len(X), self.init_)
        for tree in self.estimators_:
            f += tree[4][apply_tree(tree, X)]
        return f

    def _proba1(self, X):
        return expit(self.decision_function(X))
