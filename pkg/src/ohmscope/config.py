"""Experiment configuration as a flat ``key = value`` document.

Every key has a default; ``auto`` marks values resolved at run time
(``sigma`` from the class profiles, ``per_class`` from the ISA). Seeds left
at ``auto`` take ``$OHMSCOPE_SEED`` when it is set, otherwise 0.
"""
from __future__ import annotations

import os
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from . import kvdoc
from .classifiers import KINDS, SVM_LINEAR
from .errors import ConfigError
from .featsel import INDICATOR_MAX, INTEGER_CODES
from .isa import ISA, as_isa
from .synth import DEFAULT_PER_CLASS, DEFAULT_POINTS, FrequencyGrid

SEED_ENV = "OHMSCOPE_SEED"
SEED_KEYS = ("dataset_seed", "split_seed", "fold_seed", "svm_seed")
AUTO = "auto"
SYNTHETIC = "synthetic"
MOCK_SERVER = "mock-server"


@dataclass(frozen=True)
class ExperimentConfig:
    isa: str = "FPGA12"
    grid_start: float = 500e3
    grid_stop: float = 4e9
    grid_points: int = DEFAULT_POINTS
    sigma: float | None = None
    per_class: int | None = None
    dataset_seed: int | None = None
    split_seed: int | None = None
    fold_seed: int | None = None
    svm_seed: int | None = None
    tau1: float = 0.3
    tau2: float = 0.85
    variance_target: float = 0.95
    classifier: str = SVM_LINEAR
    acquisition: str = SYNTHETIC
    endpoint: str = "127.0.0.1:5025"
    averaging_count: int = 100
    test_fraction: float = 0.30
    folds: int = 10
    label_mode: str = INDICATOR_MAX
    identical_profiles: bool = False

    def __post_init__(self):
        object.__setattr__(self, "isa", as_isa(self.isa).value)
        object.__setattr__(self, "classifier", self.classifier.upper())
        if self.classifier not in KINDS:
            raise ConfigError(f"classifier must be one of {', '.join(KINDS)}, got {self.classifier!r}")
        if self.acquisition not in (SYNTHETIC, MOCK_SERVER):
            raise ConfigError(f"acquisition must be {SYNTHETIC} or {MOCK_SERVER}")
        if self.label_mode not in (INDICATOR_MAX, INTEGER_CODES):
            raise ConfigError(f"label_mode must be {INDICATOR_MAX} or {INTEGER_CODES}")
        if not 0 <= self.tau1 < 1 or not 0 < self.tau2 <= 1:
            raise ConfigError("need 0 <= tau1 < 1 and 0 < tau2 <= 1")
        if not 0 < self.variance_target <= 1:
            raise ConfigError("variance_target must be in (0, 1]")
        if not 0 < self.test_fraction < 1:
            raise ConfigError("test_fraction must be in (0, 1)")
        if self.folds < 2 or self.averaging_count < 1:
            raise ConfigError("folds must be >= 2 and averaging_count >= 1")
        if self.per_class is not None and self.per_class < 1:
            raise ConfigError("per_class must be >= 1")
        if self.sigma is not None and not self.sigma >= 0:
            raise ConfigError("sigma must be >= 0")
        try:
            self.grid
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @property
    def grid(self) -> FrequencyGrid:
        return FrequencyGrid(self.grid_start, self.grid_stop, self.grid_points)

    @property
    def resolved_per_class(self) -> int:
        return DEFAULT_PER_CLASS[ISA(self.isa)] if self.per_class is None else self.per_class

    def seed(self, key: str) -> int:
        value = getattr(self, key)
        if value is not None:
            return value
        env = os.environ.get(SEED_ENV)
        if env is None:
            return 0
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"${SEED_ENV} must be an integer, got {env!r}") from None

    def with_overrides(self, **changes) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in changes.items() if v is not None})

    def dumps(self) -> str:
        pairs = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if value is None:
                pairs[f.name] = AUTO
            elif isinstance(value, bool):
                pairs[f.name] = "true" if value else "false"
            elif isinstance(value, float):
                pairs[f.name] = kvdoc.fmt_float(value)
            else:
                pairs[f.name] = str(value)
        return kvdoc.dump(pairs, "ohmscope experiment config")

    @classmethod
    def loads(cls, text: str, source="config") -> "ExperimentConfig":
        doc = kvdoc.parse(text, source)
        known = {f.name: f for f in fields(cls)}
        unknown = sorted(set(doc) - set(known))
        if unknown:
            raise ConfigError(f"{source}: unknown key(s) {', '.join(unknown)}")
        kwargs = {}
        for key, text_value in doc.items():
            kwargs[key] = _coerce(key, text_value, source)
        return cls(**kwargs)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.loads(text, str(path))

    def as_dict(self) -> dict:
        return asdict(self)


_FLOATS = {"grid_start", "grid_stop", "sigma", "tau1", "tau2", "variance_target", "test_fraction"}
_INTS = {"grid_points", "per_class", "averaging_count", "folds", *SEED_KEYS}
_NULLABLE = {"sigma", "per_class", *SEED_KEYS}


def _coerce(key, value, source):
    if key in _NULLABLE and value.lower() == AUTO:
        return None
    try:
        if key in _FLOATS:
            return float(value)
        if key in _INTS:
            return int(value)
    except ValueError:
        raise ConfigError(f"{source}: {key} = {value!r} is not a number") from None
    if key == "identical_profiles":
        if value.lower() not in ("true", "false"):
            raise ConfigError(f"{source}: {key} must be true or false")
        return value.lower() == "true"
    return value
