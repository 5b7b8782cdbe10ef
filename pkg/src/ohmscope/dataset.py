"""Trace collections and the on-disk dataset layout.

A dataset directory holds four files:

``manifest``
    key = value document (ISA, grid, sigma, seeds, class names, trace count)
``index.csv``
    ``trace_id,label`` one row per trace
``grid.csv``
    ``freq_index,frequency_hz``
``traces.csv``
    ``trace_id,label,freq_index,re_ohms,im_ohms`` in long form

Floats are written as shortest round-trip decimals so that a fixed seed
reproduces every byte.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kvdoc
from .errors import DatasetError
from .isa import ISA, as_isa
from .synth import FrequencyGrid, TraceRecord

log = logging.getLogger(__name__)

LAYOUT_FILES = ("manifest", "index.csv", "grid.csv", "traces.csv")
TRACES_HEADER = "trace_id,label,freq_index,re_ohms,im_ohms"


@dataclass
class LabeledDataset:
    magnitudes: np.ndarray
    labels: np.ndarray
    class_names: list
    grid: FrequencyGrid | None = None

    def __post_init__(self):
        self.magnitudes = np.asarray(self.magnitudes, dtype=float)
        self.labels = np.asarray(self.labels, dtype=int)
        if self.magnitudes.ndim != 2 or len(self.labels) != self.magnitudes.shape[0]:
            raise DatasetError("magnitudes must be n x m with one label per row")
        if len(self.labels) and (self.labels.min() < 0 or self.labels.max() >= len(self.class_names)):
            raise DatasetError("label index outside class_names")
        if self.grid is not None and self.magnitudes.shape[1] != self.grid.points:
            raise DatasetError("row length differs from grid points")

    @property
    def shape(self):
        return self.magnitudes.shape


@dataclass
class TraceDataset:
    """Complex impedance sweeps, one row per trace."""
    samples: np.ndarray
    labels: np.ndarray
    class_names: list
    grid: FrequencyGrid
    isa: ISA = ISA.FPGA12
    sigma: float = 0.0
    seed: int = 0
    trace_ids: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=complex)
        self.labels = np.asarray(self.labels, dtype=int)
        if self.trace_ids is None:
            self.trace_ids = np.arange(len(self.labels))
        if self.samples.shape != (len(self.labels), self.grid.points):
            raise DatasetError(
                f"samples shape {self.samples.shape} != ({len(self.labels)}, {self.grid.points})")

    def __len__(self):
        return len(self.labels)

    def records(self):
        return [TraceRecord(self.class_names[lab], self.grid, row, int(tid))
                for row, lab, tid in zip(self.samples, self.labels, self.trace_ids)]

    def magnitudes(self) -> LabeledDataset:
        return LabeledDataset(np.abs(self.samples), self.labels, list(self.class_names), self.grid)


def magnitudes(traces, class_names=None) -> LabeledDataset:
    """|R + jX| per trace and frequency; labels carried through."""
    traces = list(traces)
    if not traces:
        raise DatasetError("no traces")
    grid = traces[0].grid
    for t in traces:
        if t.grid != grid or len(t.samples) != grid.points:
            raise DatasetError(f"trace {t.trace_id} is on a different grid")
    if class_names is None:
        class_names = sorted({t.label for t in traces})
    lookup = {name: i for i, name in enumerate(class_names)}
    labels = [lookup[t.label] for t in traces]
    return LabeledDataset(np.abs(np.stack([t.samples for t in traces])), labels,
                          list(class_names), grid)


def write_dataset(ds: TraceDataset, directory, extra=None) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = {
        "format": "ohmscope-dataset 1",
        "isa": as_isa(ds.isa).value,
        "grid_start": kvdoc.fmt_float(ds.grid.start),
        "grid_stop": kvdoc.fmt_float(ds.grid.stop),
        "grid_points": str(ds.grid.points),
        "sigma": kvdoc.fmt_float(ds.sigma),
        "dataset_seed": str(ds.seed),
        "class_names": ",".join(ds.class_names),
        "traces": str(len(ds)),
    }
    manifest.update(ds.meta)
    manifest.update(extra or {})
    (directory / "manifest").write_text(kvdoc.dump(manifest, "ohmscope dataset manifest"))

    names = ds.class_names
    with open(directory / "index.csv", "w", newline="\n") as fh:
        fh.write("trace_id,label\n")
        fh.writelines(f"{tid},{names[lab]}\n" for tid, lab in zip(ds.trace_ids, ds.labels))
    with open(directory / "grid.csv", "w", newline="\n") as fh:
        fh.write("freq_index,frequency_hz\n")
        fh.writelines(f"{j},{f!r}\n" for j, f in enumerate(ds.grid.values().tolist()))
    with open(directory / "traces.csv", "w", newline="\n") as fh:
        fh.write(TRACES_HEADER + "\n")
        for tid, lab, row in zip(ds.trace_ids, ds.labels, ds.samples):
            prefix = f"{tid},{names[lab]},"
            fh.write("".join(f"{prefix}{j},{re!r},{im!r}\n"
                             for j, (re, im) in enumerate(zip(row.real.tolist(), row.imag.tolist()))))
    return directory


def read_dataset(directory) -> TraceDataset:
    directory = Path(directory)
    if not directory.is_dir():
        raise DatasetError(f"{directory}: not a dataset directory")
    missing = [name for name in LAYOUT_FILES if not (directory / name).is_file()]
    if missing:
        raise DatasetError(
            f"{directory}: missing {', '.join(missing)} (layout needs {', '.join(LAYOUT_FILES)})")
    meta = kvdoc.parse((directory / "manifest").read_text(), str(directory / "manifest"))
    try:
        grid = FrequencyGrid(float(meta["grid_start"]), float(meta["grid_stop"]),
                             int(meta["grid_points"]))
        class_names = meta["class_names"].split(",")
        isa = as_isa(meta["isa"])
        n = int(meta["traces"])
    except (KeyError, ValueError) as exc:
        raise DatasetError(f"{directory / 'manifest'}: bad or missing field ({exc})") from None
    lookup = {name: i for i, name in enumerate(class_names)}

    index_lines = (directory / "index.csv").read_text().splitlines()
    if not index_lines or index_lines[0] != "trace_id,label":
        raise DatasetError(f"{directory / 'index.csv'}: bad header")
    trace_ids, labels = [], []
    for line in index_lines[1:]:
        tid, name = line.split(",")
        if name not in lookup:
            raise DatasetError(f"index.csv: unknown label {name!r}")
        trace_ids.append(int(tid))
        labels.append(lookup[name])
    if len(labels) != n:
        raise DatasetError(f"index.csv lists {len(labels)} traces, manifest says {n}")

    with open(directory / "traces.csv") as fh:
        if fh.readline().strip() != TRACES_HEADER:
            raise DatasetError(f"{directory / 'traces.csv'}: bad header")
        table = np.loadtxt(fh, delimiter=",", usecols=(0, 2, 3, 4), ndmin=2,
                           dtype=float) if n else np.empty((0, 4))
    m = grid.points
    if table.shape[0] != n * m:
        raise DatasetError(f"traces.csv has {table.shape[0]} rows, expected {n} x {m}")
    tids = table[:, 0].astype(np.int64).reshape(n, m)
    freq_index = table[:, 1].astype(np.int64).reshape(n, m)
    if n and (np.any(tids != np.asarray(trace_ids)[:, None])
              or np.any(freq_index != np.arange(m)[None, :])):
        raise DatasetError("traces.csv rows are not in (trace_id, freq_index) order of index.csv")
    samples = (table[:, 2] + 1j * table[:, 3]).reshape(n, m)
    known = {"format", "isa", "grid_start", "grid_stop", "grid_points", "sigma",
             "dataset_seed", "class_names", "traces"}
    return TraceDataset(samples, labels, class_names, grid, isa,
                        float(meta.get("sigma", 0.0)), int(meta.get("dataset_seed", 0)),
                        np.asarray(trace_ids), {k: v for k, v in meta.items() if k not in known})
