"""Binary classifiers used by the model portfolio.

Gaussian naive Bayes and L2 logistic regression are implemented here
directly (their test oracles recompute them by brute force); the tree,
forest, and k-NN families are backed by scikit-learn.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import minimize
from sklearn.base import BaseEstimator, ClassifierMixin

from .errors import DegenerateLabels

VAR_FLOOR = 1e-12


def _check_binary(y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=bool)
    if y.all() or (~y).all():
        raise DegenerateLabels("both classes must be present")
    return y


class GaussianNaiveBayes(BaseEstimator, ClassifierMixin):
    """Per-feature Gaussian class-conditional densities, MLE fit."""

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        y = _check_binary(y)
        self.classes_ = np.array([False, True])
        self.log_prior_ = np.log([np.mean(~y), np.mean(y)])
        self.mean_ = np.stack([X[~y].mean(axis=0), X[y].mean(axis=0)])
        var = np.stack([X[~y].var(axis=0), X[y].var(axis=0)])
        self.var_ = np.maximum(var, VAR_FLOOR)
        return self

    def predict_proba(self, X):
        X = np.asarray(X, dtype=float)
        # log joint per class, then normalized in log space
        joint = np.empty((X.shape[0], 2))
        for c in range(2):
            log_lik = -0.5 * (
                np.log(2 * np.pi * self.var_[c]) + (X - self.mean_[c]) ** 2 / self.var_[c]
            ).sum(axis=1)
            joint[:, c] = self.log_prior_[c] + log_lik
        joint -= joint.max(axis=1, keepdims=True)
        p = np.exp(joint)
        return p / p.sum(axis=1, keepdims=True)

    def predict(self, X):
        return self.predict_proba(X)[:, 1] >= 0.5


class L2LogisticRegression(BaseEstimator, ClassifierMixin):
    """Binary logistic regression minimizing sum NLL + 0.5*l2*||w||^2.

    The intercept is not penalized. Optimized with L-BFGS on the analytic
    gradient to tight tolerance, so the fit is effectively the unique
    optimum of the convex objective.
    """

    def __init__(self, l2: float = 1.0):
        self.l2 = l2

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        y01 = _check_binary(y).astype(float)
        n, d = X.shape
        self.classes_ = np.array([False, True])
        self._x_mean = X.mean(axis=0)
        self._x_scale = np.where(X.std(axis=0) > 0, X.std(axis=0), 1.0)
        Z = (X - self._x_mean) / self._x_scale

        def objective(theta):
            w, b = theta[:d], theta[d]
            z = Z @ w + b
            # log(1 + e^z) - y*z, stable form
            nll = np.sum(np.logaddexp(0.0, z) - y01 * z)
            p = 1.0 / (1.0 + np.exp(-z))
            grad_w = Z.T @ (p - y01) + self.l2 * w
            grad_b = np.sum(p - y01)
            return nll + 0.5 * self.l2 * (w @ w), np.append(grad_w, grad_b)

        res = minimize(
            objective,
            np.zeros(d + 1),
            jac=True,
            method="L-BFGS-B",
            options={"maxiter": 5000, "ftol": 1e-14, "gtol": 1e-10},
        )
        self.coef_ = res.x[:d]
        self.intercept_ = res.x[d]
        return self

    def decision_function(self, X):
        Z = (np.asarray(X, dtype=float) - self._x_mean) / self._x_scale
        return Z @ self.coef_ + self.intercept_

    def predict_proba(self, X):
        p1 = 1.0 / (1.0 + np.exp(-self.decision_function(X)))
        return np.column_stack([1 - p1, p1])

    def predict(self, X):
        return self.decision_function(X) >= 0.0
