"""Transistor- and gate-level CMOS impedance model.

Impedances are plain Python/numpy complex values (resistance + j*reactance,
in ohms). Every function here is pure and accepts numpy arrays wherever a
frequency is taken, so a whole sweep can be evaluated in one call.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ModelError

# L_G enters the B**(-B*L_G) factor in units of this length.
GATE_LENGTH_UNIT = 1e-9


@dataclass(frozen=True)
class MosfetParams:
    polarity: str  # "P" or "N"
    width: float
    gate_length: float  # meters
    process_constant: float  # amperes per unit width
    constant_a: float
    constant_b: float
    barrier_lowering: float  # volts
    thermal_voltage: float  # volts
    threshold_voltage: float  # volts, magnitude
    k_prime: float  # A/V^2
    w_over_l: float
    c_gd: float  # farads
    c_db: float  # farads

    def __post_init__(self):
        if self.polarity not in ("P", "N"):
            raise ModelError(f"polarity must be 'P' or 'N', got {self.polarity!r}")
        for name in ("width", "gate_length", "thermal_voltage", "k_prime",
                     "w_over_l", "c_gd", "c_db"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ModelError(f"{name} must be finite and > 0, got {value!r}")

    @property
    def c_eq(self) -> float:
        return self.c_gd + self.c_db


@dataclass(frozen=True)
class BiasPoint:
    v_ds: float = 3.3
    v_d: float = 3.3
    v_s: float = 0.0
    frequency: float = 1e9

    def __post_init__(self):
        if not np.all(np.asarray(self.frequency) > 0):
            raise ModelError("bias frequency must be > 0")


def default_nmos() -> MosfetParams:
    return MosfetParams(
        polarity="N", width=2.0, gate_length=180e-9, process_constant=1e-7,
        constant_a=1.0, constant_b=2.0, barrier_lowering=0.05,
        thermal_voltage=0.02585, threshold_voltage=0.4, k_prime=2.5e-4,
        w_over_l=2.0, c_gd=2e-15, c_db=4e-15,
    )


def default_pmos() -> MosfetParams:
    return MosfetParams(
        polarity="P", width=3.0, gate_length=180e-9, process_constant=1e-7,
        constant_a=1.0, constant_b=2.0, barrier_lowering=0.05,
        thermal_voltage=0.02585, threshold_voltage=0.45, k_prime=1e-4,
        w_over_l=3.0, c_gd=3e-15, c_db=6e-15,
    )


@dataclass(frozen=True)
class NandGateModel:
    pmos: MosfetParams = field(default_factory=default_pmos)
    nmos: MosfetParams = field(default_factory=default_nmos)
    internal_node_cap_3c: float = 3e-15
    supply_node_cap_7c: float = 7e-15
    fanout_cap_c0: float = 10e-15
    bias: BiasPoint = field(default_factory=BiasPoint)

    def __post_init__(self):
        for name in ("internal_node_cap_3c", "supply_node_cap_7c", "fanout_cap_c0"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ModelError(f"{name} must be finite and > 0, got {value!r}")

    def at_frequency(self, frequency) -> "NandGateModel":
        return replace(self, bias=replace(self.bias, frequency=frequency))


def leakage_current(p: MosfetParams, v_ds: float) -> float:
    """Subthreshold leakage current of a device in cutoff."""
    length = p.gate_length / GATE_LENGTH_UNIT
    try:
        current = (p.width * p.process_constant
                   * p.constant_b ** (-p.constant_b * length)
                   * math.exp(p.barrier_lowering / p.thermal_voltage)
                   * math.expm1(p.constant_a * v_ds / p.thermal_voltage))
    except OverflowError:
        current = math.inf
    if not math.isfinite(current):
        raise ModelError(f"leakage current overflowed for v_ds={v_ds!r}")
    return current


def cutoff_impedance(p: MosfetParams, v_ds: float) -> complex:
    if not v_ds > 0:
        raise ModelError(f"cutoff impedance needs v_ds > 0, got {v_ds!r}")
    current = leakage_current(p, v_ds)
    if current <= 0:
        raise ModelError("leakage current underflowed to zero")
    resistance = v_ds / current
    if not math.isfinite(resistance):
        raise ModelError("cutoff resistance is not finite")
    return complex(resistance, 0.0)


def _overdrive(p: MosfetParams, v_d: float, v_s: float) -> float:
    # magnitudes, so the same expression serves both polarities
    overdrive = abs(v_d - v_s) - abs(p.threshold_voltage)
    if overdrive <= 0:
        raise ModelError(f"device not past threshold (overdrive {overdrive!r} V)")
    return overdrive


def linear_resistance(p: MosfetParams, v_d: float, v_s: float) -> float:
    vov = _overdrive(p, v_d, v_s)
    return (0.5 * vov) / (0.375 * p.k_prime * p.w_over_l * vov ** 2)


def saturation_resistance(p: MosfetParams, v_d: float, v_s: float) -> float:
    vov = _overdrive(p, v_d, v_s)
    return abs(v_d - v_s) / (0.5 * p.k_prime * p.w_over_l * vov ** 2)


def effective_on_resistance(p: MosfetParams, v_d: float, v_s: float) -> float:
    return 0.5 * (linear_resistance(p, v_d, v_s) + saturation_resistance(p, v_d, v_s))


def equivalent_reactance(c_eq, f):
    """Capacitive reactance -1/(2*pi*f*c_eq); ``f`` may be an array."""
    f = np.asarray(f, dtype=float)
    if c_eq <= 0 or np.any(f <= 0):
        raise ModelError("equivalent reactance needs c_eq > 0 and f > 0")
    x = -1.0 / (2.0 * np.pi * f * c_eq)
    return float(x) if x.ndim == 0 else x


def capacitor_impedance(c, f):
    return 1j * equivalent_reactance(c, f)


def active_impedance(p: MosfetParams, bias: BiasPoint):
    r = effective_on_resistance(p, bias.v_d, bias.v_s)
    return r + 1j * equivalent_reactance(p.c_eq, bias.frequency)


def parallel(a, b):
    """Complex parallel combination a*b/(a+b)."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    total = a + b
    if np.any(total == 0):
        raise ModelError("singular parallel combination (a + b == 0)")
    out = a * b / total
    return complex(out) if out.ndim == 0 else out


def series(*zs):
    out = sum(np.asarray(z, dtype=complex) for z in zs)
    return complex(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class GateTerms:
    """The six elementary impedances a NAND case expression is built from."""
    p_active: object
    n_active: object
    p_cutoff: complex
    n_cutoff: complex
    z_3c: object
    z_eq0: object


def gate_terms(model: NandGateModel) -> GateTerms:
    bias = model.bias
    f = bias.frequency
    return GateTerms(
        p_active=active_impedance(model.pmos, bias),
        n_active=active_impedance(model.nmos, bias),
        p_cutoff=cutoff_impedance(model.pmos, bias.v_ds),
        n_cutoff=cutoff_impedance(model.nmos, bias.v_ds),
        z_3c=capacitor_impedance(model.internal_node_cap_3c, f),
        # 7C and C0 sit in parallel at the output node, so capacitances add
        z_eq0=capacitor_impedance(model.supply_node_cap_7c + model.fanout_cap_c0, f),
    )


def nand_case(terms: GateTerms, a: int, b: int):
    """Supply-to-ground impedance of the 2-input NAND for inputs (a, b)."""
    pa, na, pc, nc = terms.p_active, terms.n_active, terms.p_cutoff, terms.n_cutoff
    z3, zeq = terms.z_3c, terms.z_eq0
    if (a, b) == (0, 0):
        pull_up, lower, upper = parallel(pa, pa), nc, nc
    elif (a, b) == (0, 1):
        pull_up, lower, upper = parallel(pa, pc), nc, na
    elif (a, b) == (1, 0):
        pull_up, lower, upper = parallel(pc, pa), na, nc
    elif (a, b) == (1, 1):
        pull_up, lower, upper = parallel(pc, pc), na, na
    else:
        raise ModelError(f"NAND inputs must be bits, got ({a!r}, {b!r})")
    pull_down = parallel(series(parallel(lower, z3), upper), zeq)
    return series(pull_up, pull_down)


def nand_impedance(model: NandGateModel, a: int, b: int):
    return nand_case(gate_terms(model), a, b)
