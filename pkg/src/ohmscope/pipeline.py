"""Dataset production and the end-to-end classification run.

The run splits first, then fits screening, dominant selection, PCA and the
classifier on training rows only (also inside every CV fold). A row audit
step at the head of the fitted pipeline fingerprints every row it is fitted
on, and the run checks that no held-out row was ever seen.
"""
from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.pipeline import Pipeline

from . import kvdoc
from .classifiers import make_classifier
from .config import ExperimentConfig
from .dataset import TraceDataset
from .errors import DatasetError
from .evaluation import (ConfusionMatrix, MetricsReport, confusion_csv, cross_validate,
                         evaluate, make_folds, report_json, report_text, split)
from .featsel import FrequencySelector
from .isa import CLASS_MNEMONICS, ISA
from .pca import VariancePCA, pca_fit
from .scpi import SyntheticSource, VnaClient, acquire
from .synth import NoiseModel, ProfileModel, make_dataset
from .vna import SweepConfig, gamma_to_impedance

log = logging.getLogger(__name__)

# channel name -> set of row fingerprints seen by fit()
_AUDIT: dict = {}


def row_fingerprints(X):
    X = np.ascontiguousarray(X, dtype=float)
    return {hashlib.blake2b(row.tobytes(), digest_size=16).digest() for row in X}


class RowAudit(TransformerMixin, BaseEstimator):
    """Pass-through step that records which rows the pipeline is fitted on."""

    def __init__(self, channel="default"):
        self.channel = channel

    def fit(self, X, y=None):
        _AUDIT.setdefault(self.channel, set()).update(row_fingerprints(X))
        return self

    def transform(self, X):
        return np.asarray(X, dtype=float)


def build_pipeline(config: ExperimentConfig, audit_channel="default") -> Pipeline:
    return Pipeline([
        ("audit", RowAudit(audit_channel)),
        ("select", FrequencySelector(config.tau1, config.tau2, config.label_mode)),
        ("pca", VariancePCA(config.variance_target)),
        ("clf", make_classifier(config.classifier, random_state=config.seed("svm_seed"))),
    ])


def synth_dataset(config: ExperimentConfig, model: ProfileModel | None = None) -> TraceDataset:
    return make_dataset(config.isa, model, config.grid, config.resolved_per_class,
                        NoiseModel(config.sigma, config.seed("dataset_seed")),
                        config.identical_profiles)


def acquire_dataset(config: ExperimentConfig, endpoint: str | None = None,
                    timeout: float = 10.0) -> TraceDataset:
    """One averaged capture per (class, repetition) from the instrument at ``endpoint``."""
    endpoint = endpoint or config.endpoint
    sweep = SweepConfig(config.grid, config.averaging_count)
    names = list(CLASS_MNEMONICS[ISA(config.isa)])
    rows, labels = [], []
    with VnaClient(endpoint, timeout) as client:
        client.configure(sweep)
        for c, name in enumerate(names):
            for _ in range(config.resolved_per_class):
                rows.append(gamma_to_impedance(acquire(client, sweep, name, configure=False),
                                               sweep.z_ref))
                labels.append(c)
    sigma = float("nan") if config.sigma is None else config.sigma
    return TraceDataset(np.stack(rows), np.asarray(labels), names, config.grid, ISA(config.isa),
                        sigma, config.seed("dataset_seed"),
                        meta={"source": f"acquired {endpoint}",
                              "averaging_count": str(config.averaging_count)})


def mock_source_for(config: ExperimentConfig) -> SyntheticSource:
    return SyntheticSource(config.isa, sigma=config.sigma, seed=config.seed("dataset_seed"))


@dataclass
class PipelineResult:
    confusion: ConfusionMatrix
    report: MetricsReport
    pipeline: Pipeline
    split_plan: object
    selected: tuple
    n_components: int
    train_only: bool
    projection: np.ndarray = field(repr=False)
    files: dict = field(default_factory=dict)

    @property
    def accuracy(self) -> float:
        return self.report.overall_accuracy


def run_pipeline(dataset: TraceDataset, config: ExperimentConfig, out_dir=None) -> PipelineResult:
    data = dataset.magnitudes()
    X, y = data.magnitudes, data.labels
    n_classes = len(data.class_names)
    plan = split(y, config.test_fraction, config.seed("split_seed"))
    train = np.asarray(plan.train_indices)
    test = np.asarray(plan.test_indices)
    X_train, y_train = X[train], y[train]

    channel = f"run-{id(data)}"
    _AUDIT.pop(channel, None)
    template = build_pipeline(config, channel)
    folds = make_folds(y_train, config.folds, config.seed("fold_seed"), data.class_names)
    validation = cross_validate(template, X_train, y_train, folds)
    fitted = build_pipeline(config, channel).fit(X_train, y_train)
    predicted = fitted.predict(X[test])

    seen = _AUDIT.pop(channel, set())
    # a test row byte-identical to a training row cannot be told apart
    train_only = not (seen & (row_fingerprints(X[test]) - row_fingerprints(X_train)))
    if not train_only:
        raise DatasetError("held-out rows reached a fitted stage")

    cm, report = evaluate(y[test], predicted, n_classes, data.class_names)
    report.validation_score = validation

    selector = fitted.named_steps["select"]
    pca_model = fitted.named_steps["pca"].model_
    selected_train = selector.transform(X_train)
    # Two leading components for plotting even when fewer are retained.
    plot_model = pca_fit(selected_train, 1.0)
    leading = plot_model.components[:2]
    projection = (selector.transform(X) - plot_model.mean) @ leading.T
    if projection.shape[1] < 2:
        projection = np.hstack([projection, np.zeros((len(X), 2 - projection.shape[1]))])

    result = PipelineResult(cm, report, fitted, plan, selector.mask_.selected,
                            pca_model.n_components, train_only, projection)
    if out_dir is not None:
        result.files = write_reports(result, dataset, config, out_dir)
    return result


def write_reports(result: PipelineResult, dataset: TraceDataset, config: ExperimentConfig,
                  out_dir) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fitted = result.pipeline
    mask = fitted.named_steps["select"].mask_
    pca_model = fitted.named_steps["pca"].model_
    freqs = dataset.grid.values()
    title = (f"{config.isa} {config.classifier}: {len(result.split_plan.train_indices)} train / "
             f"{len(result.split_plan.test_indices)} test rows, {len(mask)} frequencies, "
             f"{pca_model.n_components} components")
    extra = {
        "isa": config.isa,
        "classifier": config.classifier,
        "train_rows": len(result.split_plan.train_indices),
        "test_rows": len(result.split_plan.test_indices),
        "selected_frequencies": len(mask),
        "pca_components": pca_model.n_components,
        "pca_variance_fraction": pca_model.variance_fraction,
        "train_only_fit": result.train_only,
    }
    split_of = np.empty(len(dataset), dtype=object)
    split_of[list(result.split_plan.train_indices)] = "train"
    split_of[list(result.split_plan.test_indices)] = "test"
    files = {
        "metrics.txt": report_text(result.confusion, result.report, title),
        "metrics.json": report_json(result.confusion, result.report, extra),
        "confusion.csv": confusion_csv(result.confusion, result.report),
        "mask.txt": mask.dumps() + kvdoc.dump(
            {"frequencies_hz": kvdoc.fmt_floats(freqs[list(mask.selected)])}),
        "pca.txt": pca_model.dumps(),
        "pca_projection.csv": "trace_id,label,split,pc1,pc2\n" + "".join(
            f"{tid},{dataset.class_names[lab]},{s},{p[0]!r},{p[1]!r}\n"
            for tid, lab, s, p in zip(dataset.trace_ids.tolist(), dataset.labels.tolist(),
                                      split_of, result.projection.tolist())),
    }
    for name, text in files.items():
        (out / name).write_text(text)
    return {name: out / name for name in files}


def load_metrics(out_dir) -> dict:
    return json.loads((Path(out_dir) / "metrics.json").read_text())

