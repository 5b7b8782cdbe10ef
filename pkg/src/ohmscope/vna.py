"""Reflection coefficient to impedance conversion for a one-port (S11) sweep."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ModelError, SingularityError
from .synth import FrequencyGrid

EPSILON = 1e-12
DEFAULT_Z_REF = 50.0
DEFAULT_AVERAGING = 100


@dataclass(frozen=True)
class ReflectionTrace:
    t_re: np.ndarray
    t_im: np.ndarray
    grid: FrequencyGrid

    def __post_init__(self):
        t_re = np.asarray(self.t_re, dtype=float).ravel()
        t_im = np.asarray(self.t_im, dtype=float).ravel()
        if len(t_re) != len(t_im) or len(t_re) != self.grid.points:
            raise ModelError(f"reflection trace lengths {len(t_re)}/{len(t_im)} "
                             f"do not match {self.grid.points} grid points")
        object.__setattr__(self, "t_re", t_re)
        object.__setattr__(self, "t_im", t_im)

    @property
    def gamma(self) -> np.ndarray:
        return self.t_re + 1j * self.t_im


@dataclass(frozen=True)
class SweepConfig:
    grid: FrequencyGrid = FrequencyGrid()
    averaging_count: int = DEFAULT_AVERAGING
    z_ref: float = DEFAULT_Z_REF

    def __post_init__(self):
        if int(self.averaging_count) != self.averaging_count or self.averaging_count < 1:
            raise ModelError(f"averaging count must be a positive integer, got {self.averaging_count!r}")
        if not self.z_ref > 0:
            raise ModelError(f"z_ref must be > 0, got {self.z_ref!r}")


def gamma_to_impedance(trace, z_ref=DEFAULT_Z_REF) -> np.ndarray:
    """R and X from the real/imaginary reflection parts; returns ``R + jX``.

    ``trace`` may be a :class:`ReflectionTrace` or a ``(t_re, t_im)`` pair.
    """
    if isinstance(trace, ReflectionTrace):
        t_re, t_im = trace.t_re, trace.t_im
    else:
        t_re, t_im = (np.asarray(v, dtype=float) for v in trace)
    den = (1.0 - t_re) ** 2 + t_im ** 2
    bad = np.flatnonzero(np.atleast_1d(den) <= EPSILON)
    if len(bad):
        raise SingularityError(int(bad[0]), "open-circuit singularity (reflection coefficient near +1)")
    r = z_ref * (1.0 - t_re ** 2 - t_im ** 2) / den
    x = z_ref * (2.0 * t_im) / den
    return r + 1j * x


def impedance_to_gamma(z, z_ref=DEFAULT_Z_REF):
    """``(t_re, t_im)`` of ``(z - z_ref) / (z + z_ref)``."""
    z = np.asarray(z, dtype=complex)
    den = z + z_ref
    bad = np.flatnonzero(np.atleast_1d(den) == 0)
    if len(bad):
        raise SingularityError(int(bad[0]), "impedance equals -z_ref")
    g = (z - z_ref) / den
    return g.real, g.imag
