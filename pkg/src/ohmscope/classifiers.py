"""From-scratch classifiers with a scikit-learn estimator surface.

``LinearSVM`` trains one-vs-rest L2-regularised hinge-loss machines by
mini-batch sub-gradient descent with step ``1 / (reg * t)`` and projection
onto the ball of radius ``1 / sqrt(reg)``. The returned weights are the
running average of the iterates weighted by their step index ``t``, which
converges at O(1/t) for this strongly convex objective and is what the
per-epoch trace in ``objective_history_`` is evaluated on.
"""
from __future__ import annotations

from itertools import combinations_with_replacement

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .errors import FitError, ConfigError, DatasetError

SVM_LINEAR = "SVM_LINEAR"
SVM_QUAD = "SVM_QUAD"
KNN = "KNN"
LDA = "LDA"
GNB = "GNB"
KINDS = (SVM_LINEAR, SVM_QUAD, KNN, LDA, GNB)


class _Base(ClassifierMixin, BaseEstimator):
    """Validation plus the no-feature fallback (score = log class prior)."""

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float, ensure_min_features=0)
        self.classes_, y_idx = np.unique(y, return_inverse=True)
        if len(self.classes_) < 2:
            raise FitError("training data must contain at least 2 classes")
        self.n_features_in_ = X.shape[1]
        self.class_log_prior_ = np.log(np.bincount(y_idx) / len(y_idx))
        if self.n_features_in_ > 0:
            self._fit(X, y_idx)
        return self

    def decision_function(self, X):
        check_is_fitted(self, "classes_")
        X = check_array(X, dtype=float, ensure_min_features=0)
        if X.shape[1] != self.n_features_in_:
            raise DatasetError(
                f"feature dimension mismatch: fitted on {self.n_features_in_}, got {X.shape[1]}")
        if self.n_features_in_ == 0:
            return np.tile(self.class_log_prior_, (len(X), 1))
        return self._scores(X)

    def predict(self, X):
        scores = self.decision_function(X)
        # argmax returns the first maximum: ties go to the smallest class index
        return self.classes_[np.argmax(scores, axis=1)]


def _standardizer(X):
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale == 0] = 1.0
    return mean, scale


def hinge_objective(W, Z, Y, reg):
    """Sum over machines of reg/2 |w|^2 + mean hinge loss."""
    margins = Y * (Z @ W.T)
    return float((0.5 * reg * np.einsum("ij,ij->i", W, W)
                  + np.maximum(0.0, 1.0 - margins).mean(axis=0)).sum())


class LinearSVM(_Base):

    def __init__(self, reg=1e-3, epochs=200, batch_size=32, random_state=0):
        self.reg = reg
        self.epochs = epochs
        self.batch_size = batch_size
        self.random_state = random_state

    def _fit(self, X, y_idx):
        n, d = X.shape
        self.mean_, self.scale_ = _standardizer(X)
        Z = np.hstack([(X - self.mean_) / self.scale_, np.ones((n, 1))])
        Y = np.where(y_idx[:, None] == np.arange(len(self.classes_))[None, :], 1.0, -1.0)
        reg = float(self.reg)
        radius = 1.0 / np.sqrt(reg)
        W = np.zeros((len(self.classes_), d + 1))
        W_avg = np.zeros_like(W)
        weight_sum = 0.0
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(self.random_state))))
        history = []
        t = 0
        for _ in range(self.epochs):
            order = rng.permutation(n)
            for start in range(0, n, self.batch_size):
                batch = order[start:start + self.batch_size]
                t += 1
                eta = 1.0 / (reg * t)
                violators = (Y[batch] * (Z[batch] @ W.T) < 1.0) * Y[batch]
                W = (1.0 - eta * reg) * W + (eta / len(batch)) * (violators.T @ Z[batch])
                norms = np.linalg.norm(W, axis=1)
                W *= np.minimum(1.0, radius / np.maximum(norms, 1e-300))[:, None]
                weight_sum += t
                W_avg += (W - W_avg) * (t / weight_sum)
            history.append(hinge_objective(W_avg, Z, Y, reg))
        self.coef_ = W_avg
        self.objective_history_ = np.array(history)

    def _scores(self, X):
        Z = np.hstack([(X - self.mean_) / self.scale_, np.ones((len(X), 1))])
        return Z @ self.coef_.T


def quadratic_features(X):
    """All monomials of degree 1 and 2 (the constant lives in the SVM bias)."""
    X = np.asarray(X, dtype=float)
    pairs = list(combinations_with_replacement(range(X.shape[1]), 2))
    quad = np.stack([X[:, i] * X[:, j] for i, j in pairs], axis=1) if pairs else X[:, :0]
    return np.hstack([X, quad])


class QuadraticSVM(_Base):
    """Linear SVM on an explicit degree-2 polynomial expansion."""

    def __init__(self, reg=1e-3, epochs=200, batch_size=32, random_state=0):
        self.reg = reg
        self.epochs = epochs
        self.batch_size = batch_size
        self.random_state = random_state

    def _fit(self, X, y_idx):
        self.mean_, self.scale_ = _standardizer(X)
        self.svm_ = LinearSVM(self.reg, self.epochs, self.batch_size, self.random_state)
        self.svm_.fit(quadratic_features((X - self.mean_) / self.scale_), y_idx)

    def _scores(self, X):
        return self.svm_.decision_function(quadratic_features((X - self.mean_) / self.scale_))


class KNearestNeighbors(_Base):

    def __init__(self, k_neighbors=5):
        self.k_neighbors = k_neighbors

    def _fit(self, X, y_idx):
        self.X_ = X
        self.y_ = y_idx

    def _scores(self, X):
        """Neighbour vote counts per class."""
        k = min(self.k_neighbors, len(self.X_))
        votes = np.zeros((len(X), len(self.classes_)))
        for start in range(0, len(X), 512):
            chunk = X[start:start + 512]
            d2 = (np.einsum("ij,ij->i", chunk, chunk)[:, None]
                  - 2 * chunk @ self.X_.T + np.einsum("ij,ij->i", self.X_, self.X_)[None, :])
            nearest = np.argsort(d2, axis=1, kind="stable")[:, :k]
            for c in range(len(self.classes_)):
                votes[start:start + len(chunk), c] = (self.y_[nearest] == c).sum(axis=1)
        return votes


class LinearDiscriminant(_Base):

    def __init__(self, ridge=1e-6):
        self.ridge = ridge

    def _fit(self, X, y_idx):
        n, m = X.shape
        n_classes = len(self.classes_)
        means = np.array([X[y_idx == c].mean(axis=0) for c in range(n_classes)])
        resid = X - means[y_idx]
        cov = resid.T @ resid / max(n - n_classes, 1)
        cov[np.diag_indices(m)] += self.ridge * np.trace(cov) / m
        try:
            chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError:
            raise FitError("pooled covariance is singular even after ridge") from None
        inv_means = np.linalg.solve(chol.T, np.linalg.solve(chol, means.T)).T
        self.means_ = means
        self.coef_ = inv_means
        self.intercept_ = -0.5 * np.einsum("ij,ij->i", means, inv_means) + self.class_log_prior_

    def _scores(self, X):
        return X @ self.coef_.T + self.intercept_


class GaussianNaiveBayes(_Base):

    def __init__(self, var_floor=1e-9):
        self.var_floor = var_floor

    def _fit(self, X, y_idx):
        n_classes = len(self.classes_)
        self.theta_ = np.array([X[y_idx == c].mean(axis=0) for c in range(n_classes)])
        self.var_ = np.maximum(
            np.array([X[y_idx == c].var(axis=0) for c in range(n_classes)]), self.var_floor)

    def _scores(self, X):
        """Joint log-likelihood per class."""
        ll = -0.5 * (np.log(2 * np.pi * self.var_).sum(axis=1)[None, :]
                     + (((X[:, None, :] - self.theta_[None]) ** 2) / self.var_[None]).sum(axis=2))
        return ll + self.class_log_prior_


def make_classifier(kind: str, random_state: int = 0, **params):
    kind = kind.upper()
    if kind == SVM_LINEAR:
        return LinearSVM(random_state=random_state, **params)
    if kind == SVM_QUAD:
        return QuadraticSVM(random_state=random_state, **params)
    if kind == KNN:
        return KNearestNeighbors(**params)
    if kind == LDA:
        return LinearDiscriminant(**params)
    if kind == GNB:
        return GaussianNaiveBayes(**params)
    raise ConfigError(f"unknown classifier {kind!r}; expected one of {', '.join(KINDS)}")
