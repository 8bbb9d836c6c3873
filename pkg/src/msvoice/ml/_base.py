from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.multiclass import check_classification_targets
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y


class BinaryClassifier(ClassifierMixin, BaseEstimator):
    """Shared plumbing for the two-class estimators in this package.

    Subclasses implement ``_fit(X, y01)`` and ``_proba1(X)``; labels are
    mapped to 0/1 in sorted order so ``classes_[1]`` is the positive class.
    """

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        check_classification_targets(y)
        self.classes_, y01 = np.unique(y, return_inverse=True)
        if len(self.classes_) != 2:
            raise ValueError(f"binary classifier needs exactly 2 classes, got {len(self.classes_)}")
        self.n_features_in_ = X.shape[1]
        self._fit(X, y01.astype(np.float64))
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "classes_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        p1 = np.clip(self._proba1(X), 0.0, 1.0)
        return np.column_stack([1.0 - p1, p1])

    def predict(self, X):
        return self.classes_[(self.predict_proba(X)[:, 1] >= 0.5).astype(int)]
