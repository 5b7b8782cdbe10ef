"""Frequency selection: label screening and dominant-point pruning.

Correlations use the single-pass sum formula
``(n*Sxy - Sx*Sy) / sqrt((n*Sxx - Sx^2) * (n*Syy - Sy^2))``, evaluated after
shifting each vector by its first element (Pearson's r is shift invariant,
and the shift keeps the sums small).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from . import kvdoc
from .errors import ConfigError, DatasetError, UndefinedCorrelationError

log = logging.getLogger(__name__)

INDICATOR_MAX = "indicator-max"
INTEGER_CODES = "integer-codes"


def pearson(x, y) -> float:
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    n = len(x)
    if n < 2 or len(y) != n:
        raise ValueError(f"pearson needs two vectors of equal length >= 2, got {len(x)}, {len(y)}")
    x = x - x[0]
    y = y - y[0]
    sx, sy = math.fsum(x), math.fsum(y)
    sxy = math.fsum(x * y)
    sxx, syy = math.fsum(x * x), math.fsum(y * y)
    vx = n * sxx - sx * sx
    vy = n * syy - sy * sy
    if vx <= 0 or vy <= 0:
        raise UndefinedCorrelationError("correlation undefined: a vector has zero variance")
    r = (n * sxy - sx * sy) / math.sqrt(vx * vy)
    return max(-1.0, min(1.0, r))


def correlate_columns(a, b=None):
    """Pearson r between every column of ``a`` and every column of ``b``.

    Zero-variance columns get r = 0 instead of raising.
    """
    a = np.asarray(a, dtype=float)
    b = a if b is None else np.asarray(b, dtype=float)
    n = a.shape[0]
    a = a - a[:1]
    b = b - b[:1]
    sa, sb = a.sum(axis=0), b.sum(axis=0)
    va = n * np.einsum("ij,ij->j", a, a) - sa * sa
    vb = n * np.einsum("ij,ij->j", b, b) - sb * sb
    num = n * (a.T @ b) - np.outer(sa, sb)
    ok_a = (va > 0) & np.any(a != 0, axis=0)
    ok_b = (vb > 0) & np.any(b != 0, axis=0)
    den = np.sqrt(np.outer(np.where(ok_a, va, 1.0), np.where(ok_b, vb, 1.0)))
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.clip(num / den, -1.0, 1.0)
    r[~np.isfinite(r)] = 0.0
    r[~ok_a, :] = 0.0
    r[:, ~ok_b] = 0.0
    return r


def label_scores(X, y, mode=INDICATOR_MAX, n_classes=None):
    y = np.asarray(y, dtype=int)
    n_classes = int(y.max()) + 1 if n_classes is None else n_classes
    if mode == INDICATOR_MAX:
        indicators = (y[:, None] == np.arange(n_classes)[None, :]).astype(float)
        return np.abs(correlate_columns(X, indicators)).max(axis=1)
    if mode == INTEGER_CODES:
        return np.abs(correlate_columns(X, y[:, None].astype(float)))[:, 0]
    raise ConfigError(f"unknown label mode {mode!r}")


def screen_by_label(X, y, tau1=0.3, mode=INDICATOR_MAX, n_classes=None):
    """Columns whose label score is >= tau1, as ``(indices, scores)`` by descending score."""
    if not 0 <= tau1 < 1:
        raise ConfigError(f"tau1 must be in [0, 1), got {tau1!r}")
    X = np.asarray(X, dtype=float)
    scores = label_scores(X, y, mode, n_classes)
    varying = np.any(X != X[:1], axis=0)
    order = np.argsort(-scores, kind="stable")
    keep = order[(scores[order] >= tau1) & varying[order]]
    return keep, scores[keep]


def select_dominant(X, candidates, tau2=0.85):
    """Greedy sweep: accept a candidate iff |r| < tau2 against every accepted column."""
    candidates = np.asarray(candidates, dtype=int)
    if len(candidates) == 0:
        return np.empty(0, dtype=int)
    r = np.abs(correlate_columns(np.asarray(X)[:, candidates]))
    accepted = []
    for pos in range(len(candidates)):
        if not accepted or r[pos, accepted].max() < tau2:
            accepted.append(pos)
    return candidates[accepted]


@dataclass(frozen=True)
class FrequencyMask:
    selected: tuple
    scores: tuple
    n_columns: int

    def __post_init__(self):
        sel = list(self.selected)
        if sel != sorted(set(sel)) or (sel and (sel[0] < 0 or sel[-1] >= self.n_columns)):
            raise DatasetError("mask indices must be unique, increasing and < n_columns")

    def __len__(self):
        return len(self.selected)

    def dumps(self) -> str:
        return kvdoc.dump({
            "n_columns": str(self.n_columns),
            "count": str(len(self.selected)),
            "selected": " ".join(map(str, self.selected)),
            "scores": kvdoc.fmt_floats(self.scores),
        }, "ohmscope frequency mask v1")

    @classmethod
    def loads(cls, text: str) -> "FrequencyMask":
        doc = kvdoc.parse(text, "frequency mask")
        return cls(tuple(kvdoc.parse_ints(doc["selected"])),
                   tuple(kvdoc.parse_floats(doc["scores"])), int(doc["n_columns"]))


class FrequencySelector(TransformerMixin, BaseEstimator):
    """Two-stage selection: label screening at ``tau1``, then dominant points at ``tau2``."""

    def __init__(self, tau1=0.3, tau2=0.85, label_mode=INDICATOR_MAX):
        self.tau1 = tau1
        self.tau2 = tau2
        self.label_mode = label_mode

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float)
        self.classes_, y_idx = np.unique(y, return_inverse=True)
        candidates, cand_scores = screen_by_label(X, y_idx, self.tau1, self.label_mode,
                                                  len(self.classes_))
        chosen = select_dominant(X, candidates, self.tau2)
        score_of = dict(zip(candidates.tolist(), cand_scores.tolist()))
        selected = sorted(chosen.tolist())
        self.mask_ = FrequencyMask(tuple(selected), tuple(score_of[j] for j in selected),
                                   X.shape[1])
        self.candidates_ = candidates
        self.n_features_in_ = X.shape[1]
        self.n_fit_rows_ = X.shape[0]
        log.info("screened %d of %d columns, kept %d dominant",
                 len(candidates), X.shape[1], len(selected))
        return self

    def transform(self, X):
        check_is_fitted(self, "mask_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise DatasetError(f"expected {self.n_features_in_} columns, got {X.shape[1]}")
        return X[:, list(self.mask_.selected)]
