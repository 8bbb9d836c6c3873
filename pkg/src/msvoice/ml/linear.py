from __future__ import annotations

import numpy as np
from scipy.special import expit

from ..stats import irls_logistic
from ._base import BinaryClassifier


class L2LogisticRegression(BinaryClassifier):
    """Ridge-penalized logistic regression fitted by IRLS.

    Minimizes mean log-loss + ``alpha``/2 * ||w||^2 (intercept unpenalized).
    """

    def __init__(self, alpha=0.01, max_iter=100, tol=1e-8):
        self.alpha = alpha
        self.max_iter = max_iter
        self.tol = tol

    def _fit(self, X, y):
        design = np.column_stack([np.ones(len(X)), X])
        beta, _, self.converged_, self.n_iter_ = irls_logistic(design, y, l2=self.alpha, max_iter=self.max_iter, tol=self.tol)
        self.intercept_ = float(beta[0])
        self.coef_ = beta[1:]

    def decision_function(self, X):
        return self.intercept_ + np.asarray(X, dtype=np.float64) @ self.coef_

    def _proba1(self, X):
        return expit(self.decision_function(X))


class L2LogisticRegressionCV(BinaryClassifier):
    """:class:`L2LogisticRegression` with ``alpha`` picked by inner stratified CV.

    The grid value with the lowest mean held-out log-loss wins (ties go to
    the stronger penalty); the model is then refit on all rows.
    """

    def __init__(self, alphas=(0.001, 0.01, 0.1, 1.0), cv=3, random_state=None):
        self.alphas = alphas
        self.cv = cv
        self.random_state = random_state

    def _fit(self, X, y):
        from .evaluation import kfold_indices

        seed = 0 if self.random_state is None else int(self.random_state)
        folds = kfold_indices(len(y), y, self.cv, seed)
        losses = []
        for alpha in self.alphas:
            total = 0.0
            for test in folds:
                train = np.setdiff1d(np.arange(len(y)), test)
                model = L2LogisticRegression(alpha=alpha).fit(X[train], y[train])
                p = np.clip(model.predict_proba(X[test])[:, 1], 1e-12, 1 - 1e-12)
                total += -np.sum(y[test] * np.log(p) + (1 - y[test]) * np.log(1 - p))
            losses.append(total / len(y))
        losses = np.asarray(losses)
        best = max(i for i in range(len(losses)) if losses[i] <= losses.min() + 1e-12)
        self.cv_losses_ = losses
        self.alpha_ = float(self.alphas[best])
        self.model_ = L2LogisticRegression(alpha=self.alpha_).fit(X, y)

    def _proba1(self, X):
        return self.model_.predict_proba(X)[:, 1]
