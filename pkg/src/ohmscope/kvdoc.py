"""Flat ``key = value`` text documents with ``#`` comments.

Used for experiment configs, dataset manifests, program manifests and the
serialized frequency mask / PCA model.
"""
from __future__ import annotations

from .errors import ConfigError


def parse(text: str, source: str = "<document>") -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split(" #", 1)[0].strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        if key in out:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def dump(pairs, header: str | None = None) -> str:
    lines = [f"# {header}"] if header else []
    items = pairs.items() if hasattr(pairs, "items") else pairs
    lines += [f"{k} = {v}" for k, v in items]
    return "\n".join(lines) + "\n"


def fmt_float(x) -> str:
    """Shortest round-trip decimal."""
    return repr(float(x))


def fmt_floats(values) -> str:
    return " ".join(repr(float(v)) for v in values)


def parse_floats(text: str):
    return [float(t) for t in text.split()]


def parse_ints(text: str):
    return [int(t) for t in text.split()]
