from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_random_state

from ._base import BinaryClassifier
from .tree import apply_tree, build_tree


class RandomForestClassifier(BinaryClassifier):
    """Bagged, fully grown Gini trees with random feature subsets per split.

    Parameters
    ----------
    n_estimators : int, default=500
    max_features : "sqrt", int or None, default="sqrt"
        Features examined per split; None uses all of them.
    max_depth : int or None, default=None
    min_samples_leaf : int, default=1
    oob_score : bool, default=False
        Store out-of-bag accuracy in ``oob_score_`` and per-sample
        probabilities in ``oob_decision_function_``.
    random_state : int, RandomState or None
        Seeds the bootstrap draws and feature sampling.
    """

    def __init__(self, n_estimators=500, max_features="sqrt", max_depth=None, min_samples_leaf=1,
                 oob_score=False, random_state=None):
        self.n_estimators = n_estimators
        self.max_features = max_features
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.oob_score = oob_score
        self.random_state = random_state

    def _n_split_features(self, p):
        if self.max_features == "sqrt":
            return max(1, int(np.sqrt(p)))
        if self.max_features is None:
            return p
        return max(1, min(p, int(self.max_features)))

    def _fit(self, X, y):
        rng = check_random_state(self.random_state)
        n, p = X.shape
        m = self._n_split_features(p)
        self.estimators_ = []
        oob_sum = np.zeros(n)
        oob_count = np.zeros(n)
        for _ in range(self.n_estimators):
            boot = rng.randint(0, n, n)
            tree = build_tree(X[boot], y[boot], self.max_depth, 2, self.min_samples_leaf, m, rng)
            self.estimators_.append(tree)
            if self.oob_score:
                out = np.setdiff1d(np.arange(n), boot)
                if out.size:
                    oob_sum[out] += tree[4][apply_tree(tree, X[out])]
                    oob_count[out] += 1
        if self.oob_score:
            seen = oob_count > 0
            proba = np.where(seen, oob_sum / np.maximum(oob_count, 1), np.nan)
            self.oob_decision_function_ = proba
            self.oob_score_ = float(np.mean((proba[seen] >= 0.5) == (y[seen] == 1)))

    def _proba1(self, X):
        total = np.zeros(len(X))
        for tree in self.estimators_:
            total += tree[4][apply_tree(tree, X)]
        return total / len(self.estimators_)
