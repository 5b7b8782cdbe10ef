"""Principal component analysis retaining a target fraction of variance.

The covariance (divisor n - 1) is diagonalised with LAPACK's symmetric
solver (``numpy.linalg.eigh``). Each component's sign is fixed so that its
largest-magnitude entry is positive, which makes fitted models reproducible
across solvers.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from . import kvdoc
from .errors import DatasetError, FitError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray
    components: np.ndarray  # k x m, orthonormal rows
    explained_variance: np.ndarray
    total_variance: float
    variance_target: float

    def __post_init__(self):
        for name in ("mean", "components", "explained_variance"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_components(self) -> int:
        return self.components.shape[0]

    @property
    def explained_variance_ratio(self) -> np.ndarray:
        if self.total_variance == 0:
            return np.zeros_like(self.explained_variance)
        return self.explained_variance / self.total_variance

    @property
    def variance_fraction(self) -> float:
        return float(self.explained_variance_ratio.sum())

    def dumps(self) -> str:
        pairs = {
            "variance_target": kvdoc.fmt_float(self.variance_target),
            "n_features": str(len(self.mean)),
            "n_components": str(self.n_components),
            "total_variance": kvdoc.fmt_float(self.total_variance),
            "mean": kvdoc.fmt_floats(self.mean),
            "explained_variance": kvdoc.fmt_floats(self.explained_variance),
        }
        for i, row in enumerate(self.components):
            pairs[f"component.{i}"] = kvdoc.fmt_floats(row)
        return kvdoc.dump(pairs, "ohmscope pca model v1")

    @classmethod
    def loads(cls, text: str) -> "PcaModel":
        doc = kvdoc.parse(text, "pca model")
        k = int(doc["n_components"])
        m = int(doc["n_features"])
        comps = np.array([kvdoc.parse_floats(doc[f"component.{i}"]) for i in range(k)]).reshape(k, m)
        return cls(np.array(kvdoc.parse_floats(doc["mean"])), comps,
                   np.array(kvdoc.parse_floats(doc["explained_variance"])),
                   float(doc["total_variance"]), float(doc["variance_target"]))


def _fix_signs(vectors):
    # vectors as rows; first index of max |entry| wins ties
    idx = np.argmax(np.abs(vectors), axis=1)
    signs = np.sign(vectors[np.arange(len(vectors)), idx])
    signs[signs == 0] = 1.0
    return vectors * signs[:, None]


def pca_fit(X, variance_target=0.95) -> PcaModel:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise FitError(f"PCA needs at least 2 rows, got shape {X.shape}")
    if not 0 < variance_target <= 1:
        raise FitError(f"variance_target must be in (0, 1], got {variance_target!r}")
    n, m = X.shape
    if m == 0:
        log.warning("PCA fitted on zero columns; the model is empty")
        return PcaModel(np.zeros(0), np.zeros((0, 0)), np.zeros(0), 0.0, variance_target)
    mean = X.mean(axis=0)
    centered = X - mean
    keep = np.any(centered != 0, axis=0)
    if not keep.all():
        log.warning("dropping %d zero-variance column(s) before PCA", int((~keep).sum()))
    if not keep.any():
        raise FitError("all columns have zero variance")
    sub = centered[:, keep]
    cov = sub.T @ sub / (n - 1)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals, kind="stable")[::-1]
    evals = np.clip(evals[order], 0.0, None)
    evecs = evecs[:, order].T
    total = float(evals.sum())
    ratios = np.cumsum(evals) / total
    k = int(np.searchsorted(ratios, variance_target, side="left") + 1)
    # a target of 1.0 can miss the last cumulative ratio by round-off
    k = min(k, int(np.count_nonzero(evals > 0)) or 1)
    comps = np.zeros((k, m))
    comps[:, keep] = _fix_signs(evecs[:k])
    return PcaModel(mean, comps, evals[:k], total, variance_target)


def pca_transform(model: PcaModel, rows) -> np.ndarray:
    rows = np.asarray(rows, dtype=float)
    if rows.ndim == 1:
        rows = rows[None, :]
    if rows.shape[1] != len(model.mean):
        raise DatasetError(f"PCA expects {len(model.mean)} features, got {rows.shape[1]}")
    return (rows - model.mean) @ model.components.T


class VariancePCA(TransformerMixin, BaseEstimator):
    """Estimator wrapper around :func:`pca_fit` / :func:`pca_transform`."""

    def __init__(self, variance_target=0.95):
        self.variance_target = variance_target

    def fit(self, X, y=None):
        X = check_array(X, dtype=float, ensure_min_features=0)
        self.model_ = pca_fit(X, self.variance_target)
        self.n_features_in_ = X.shape[1]
        self.n_components_ = self.model_.n_components
        return self

    def transform(self, X):
        check_is_fitted(self, "model_")
        return pca_transform(self.model_, check_array(X, dtype=float, ensure_min_features=0))
