"""Stratified splitting, k-fold cross-validation and macro-averaged metrics."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import clone

from .classifiers import make_classifier
from .errors import DatasetError, EvaluationError

log = logging.getLogger(__name__)


def _rng(seed):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))


@dataclass(frozen=True)
class SplitPlan:
    train_indices: tuple
    test_indices: tuple
    seed: int
    test_fraction: float = 0.30
    stratified: bool = True


def split(labels, test_fraction=0.30, seed=0, stratified=True) -> SplitPlan:
    """Hold out ``round(n_c * test_fraction)`` rows of every class (or of all rows)."""
    labels = np.asarray(labels)
    if not 0 < test_fraction < 1:
        raise DatasetError(f"test_fraction must be in (0, 1), got {test_fraction!r}")
    rng = _rng(seed)
    groups = [np.flatnonzero(labels == c) for c in np.unique(labels)] if stratified \
        else [np.arange(len(labels))]
    test = []
    for rows in groups:
        n_test = int(round(len(rows) * test_fraction))
        test.extend(rng.permutation(rows)[:n_test].tolist())
    test_set = set(test)
    train = [i for i in range(len(labels)) if i not in test_set]
    return SplitPlan(tuple(train), tuple(sorted(test)), int(seed), test_fraction, stratified)


@dataclass(frozen=True)
class FoldPlan:
    folds: tuple  # tuple of tuples of row positions
    seed: int

    @property
    def k(self):
        return len(self.folds)


def make_folds(labels, k=10, seed=0, class_names=None) -> FoldPlan:
    """Stratified folds over positions ``0..len(labels)-1``.

    Each class is shuffled and dealt round-robin, starting where the
    previous class stopped so fold sizes stay within one row of each other.
    """
    labels = np.asarray(labels)
    if k < 2:
        raise DatasetError(f"need at least 2 folds, got {k}")
    rng = _rng(seed)
    folds = [[] for _ in range(k)]
    offset = 0
    for c in np.unique(labels):
        rows = np.flatnonzero(labels == c)
        if len(rows) < k:
            name = class_names[int(c)] if class_names is not None else c
            raise DatasetError(f"class {name} has {len(rows)} rows, fewer than k = {k} folds")
        for j, r in enumerate(rng.permutation(rows)):
            folds[(offset + j) % k].append(int(r))
        offset = (offset + len(rows)) % k
    return FoldPlan(tuple(tuple(sorted(f)) for f in folds), int(seed))


def cross_validate(estimator, X, y, folds: FoldPlan) -> float:
    """Mean held-fold fraction correct; ``estimator`` may be a kind name."""
    if isinstance(estimator, str):
        estimator = make_classifier(estimator)
    X = np.asarray(X)
    y = np.asarray(y)
    scores = []
    everything = np.arange(len(y))
    for held in folds.folds:
        held = np.asarray(held, dtype=int)
        fit_rows = np.setdiff1d(everything, held)
        model = clone(estimator).fit(X[fit_rows], y[fit_rows])
        scores.append(float(np.mean(model.predict(X[held]) == y[held])))
    return float(np.mean(scores))


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: np.ndarray  # rows true, columns predicted

    @property
    def tp(self):
        return np.diag(self.counts).astype(float)

    @property
    def fp(self):
        return self.counts.sum(axis=0) - self.tp

    @property
    def fn(self):
        return self.counts.sum(axis=1) - self.tp

    @property
    def tn(self):
        return self.counts.sum() - self.tp - self.fp - self.fn


def _ratio(num, den, what):
    out = np.zeros_like(num, dtype=float)
    ok = den > 0
    out[ok] = num[ok] / den[ok]
    if not ok.all():
        log.warning("%s undefined (0/0) for class(es) %s; set to 0",
                    what, np.flatnonzero(~ok).tolist())
    return out


@dataclass
class MetricsReport:
    recall: float
    specificity: float
    precision: float
    accuracy: float  # macro mean of per-class (TP + TN) / n
    f1: float
    overall_accuracy: float  # fraction of rows predicted correctly
    ppv: np.ndarray
    fdr: np.ndarray
    tpr: np.ndarray
    fnr: np.ndarray
    validation_score: float | None = None
    class_names: list = field(default_factory=list)

    def summary(self) -> dict:
        return {
            "validation_score": self.validation_score,
            "f1": self.f1,
            "recall": self.recall,
            "specificity": self.specificity,
            "precision": self.precision,
            "accuracy": self.accuracy,
            "overall_accuracy": self.overall_accuracy,
        }


def evaluate(true_labels, predicted_labels, n_classes, class_names=None):
    true_labels = np.asarray(true_labels, dtype=int)
    predicted_labels = np.asarray(predicted_labels, dtype=int)
    if true_labels.shape != predicted_labels.shape:
        raise EvaluationError(
            f"length mismatch: {len(true_labels)} true vs {len(predicted_labels)} predicted")
    if len(true_labels) == 0:
        raise EvaluationError("nothing to evaluate")
    counts = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(counts, (true_labels, predicted_labels), 1)
    cm = ConfusionMatrix(counts)
    tp, fp, fn, tn = cm.tp, cm.fp, cm.fn, cm.tn
    n = float(counts.sum())
    tpr = _ratio(tp, tp + fn, "recall")
    ppv = _ratio(tp, tp + fp, "precision")
    tnr = _ratio(tn, tn + fp, "specificity")
    recall, precision = float(tpr.mean()), float(ppv.mean())
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    report = MetricsReport(
        recall=recall, specificity=float(tnr.mean()), precision=precision,
        accuracy=float(((tp + tn) / n).mean()), f1=f1,
        overall_accuracy=float(tp.sum() / n),
        ppv=ppv, fdr=1.0 - ppv, tpr=tpr, fnr=1.0 - tpr,
        class_names=list(class_names) if class_names is not None
        else [str(i) for i in range(n_classes)])
    return cm, report


_COLUMNS = ("Validation Score", "F1", "Recall", "Specificity", "Precision", "Accuracy",
            "Overall Accuracy")


def _fmt(x):
    return "n/a" if x is None else f"{x:.4f}"


def report_text(cm: ConfusionMatrix, report: MetricsReport, title="") -> str:
    s = report.summary()
    values = [s["validation_score"], s["f1"], s["recall"], s["specificity"],
              s["precision"], s["accuracy"], s["overall_accuracy"]]
    lines = [title] if title else []
    lines.append(" | ".join(_COLUMNS))
    lines.append(" | ".join(_fmt(v).rjust(len(c)) for c, v in zip(_COLUMNS, values)))
    lines.append("")
    names = report.class_names
    width = max(6, *(len(n) for n in names))
    lines.append("confusion (rows true, columns predicted)")
    lines.append(" " * width + " " + " ".join(n.rjust(width) for n in names))
    for name, row in zip(names, cm.counts):
        lines.append(name.rjust(width) + " " + " ".join(str(v).rjust(width) for v in row))
    for tag, vec in (("PPV", report.ppv), ("FDR", report.fdr),
                     ("TPR", report.tpr), ("FNR", report.fnr)):
        lines.append(tag.rjust(width) + " " + " ".join(f"{v:.3f}".rjust(width) for v in vec))
    return "\n".join(lines) + "\n"


def report_json(cm: ConfusionMatrix, report: MetricsReport, extra=None) -> str:
    doc = dict(report.summary())
    doc.update({
        "class_names": report.class_names,
        "confusion": cm.counts.tolist(),
        "ppv": report.ppv.tolist(),
        "fdr": report.fdr.tolist(),
        "tpr": report.tpr.tolist(),
        "fnr": report.fnr.tolist(),
    })
    doc.update(extra or {})
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def confusion_csv(cm: ConfusionMatrix, report: MetricsReport) -> str:
    names = report.class_names
    rows = ["true\\predicted," + ",".join(names)]
    rows += [f"{n}," + ",".join(map(str, r)) for n, r in zip(names, cm.counts)]
    for tag, vec in (("PPV", report.ppv), ("FDR", report.fdr),
                     ("TPR", report.tpr), ("FNR", report.fnr)):
        rows.append(tag + "," + ",".join(repr(float(v)) for v in vec))
    return "\n".join(rows) + "\n"
