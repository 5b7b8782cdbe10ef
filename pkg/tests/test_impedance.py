import math
from dataclasses import replace

import numpy as np
import pytest

from ohmscope.errors import ModelError
from ohmscope.impedance import (BiasPoint, NandGateModel, active_impedance, cutoff_impedance,
                                default_nmos, default_pmos, effective_on_resistance,
                                equivalent_reactance, gate_terms, leakage_current,
                                linear_resistance, nand_case, nand_impedance, parallel,
                                saturation_resistance, series)

# straight-line re-evaluations of the default device formulas
LEAK_N_3V3 = 1.6297024620621208e-59
R_LIN_P = 1559.4541910331384
R_SAT_N = 1569.5600475624256
R_ON_N = 1244.5501387237416
R_ON_P = 2133.9899456242947
Z_CASES_1GHZ = {
    (0, 0): 1066.9949728121474 - 18203.996758876918j,
    (0, 1): 2147.77727516339 - 26060.65144707103j,
    (1, 0): 2133.9899456242947 - 27045.938041759993j,
    (1, 1): 6.749698338236114e58 - 7728.071262143443j,
}


def unit_device(**kw):
    base = dict(k_prime=1.0, w_over_l=1.0, threshold_voltage=1.0)
    base.update(kw)
    return replace(default_nmos(), **base)


def test_leakage_zero_bias():
    assert leakage_current(default_nmos(), 0.0) == 0.0


def test_leakage_golden_and_width_linearity():
    n = default_nmos()
    assert leakage_current(n, 3.3) == pytest.approx(LEAK_N_3V3, rel=1e-12)
    assert leakage_current(replace(n, width=2 * n.width), 3.3) / leakage_current(n, 3.3) == 2.0


def test_leakage_overflow_is_model_error():
    with pytest.raises(ModelError):
        leakage_current(replace(default_nmos(), gate_length=1e-12, process_constant=1e300), 50.0)


def test_cutoff_impedance():
    n = default_nmos()
    assert cutoff_impedance(n, 3.3) == pytest.approx(3.3 / LEAK_N_3V3, rel=1e-12)
    half = replace(n, width=n.width / 2)
    assert cutoff_impedance(half, 3.3).real / cutoff_impedance(n, 3.3).real == pytest.approx(2.0, rel=1e-15)
    vs = np.linspace(0.01, 3.3, 100)
    rs = [cutoff_impedance(n, v).real for v in vs]
    assert all(a > b for a, b in zip(rs, rs[1:]))
    for bad in (0.0, -1.0):
        with pytest.raises(ModelError):
            cutoff_impedance(n, bad)


def test_region_resistances_unit_cases():
    dev = unit_device()
    assert linear_resistance(dev, 2.0, 0.0) == pytest.approx(4 / 3, rel=1e-15)
    assert linear_resistance(dev, 3.0, 0.0) == pytest.approx(2 / 3, rel=1e-15)
    assert saturation_resistance(dev, 2.0, 0.0) == pytest.approx(4.0, rel=1e-15)
    assert effective_on_resistance(dev, 2.0, 0.0) == pytest.approx(8 / 3, rel=1e-15)


def test_saturation_with_zero_threshold():
    # threshold 0 is allowed for this formula check
    dev = replace(unit_device(), threshold_voltage=0.0)
    assert saturation_resistance(dev, 2.0, 0.0) == pytest.approx(1.0, rel=1e-15)


def test_region_error_below_threshold():
    with pytest.raises(ModelError):
        linear_resistance(default_nmos(), 0.3, 0.0)


def test_default_on_resistances():
    assert linear_resistance(default_pmos(), 3.3, 0.0) == pytest.approx(R_LIN_P, rel=1e-12)
    assert saturation_resistance(default_nmos(), 3.3, 0.0) == pytest.approx(R_SAT_N, rel=1e-12)
    assert effective_on_resistance(default_nmos(), 3.3, 0.0) == pytest.approx(R_ON_N, rel=1e-12)
    assert effective_on_resistance(default_pmos(), 3.3, 0.0) == pytest.approx(R_ON_P, rel=1e-12)


def test_equivalent_reactance():
    assert equivalent_reactance(1 / (2 * math.pi), 1.0) == pytest.approx(-1.0, rel=1e-15)
    assert equivalent_reactance(10e-15, 1e9) == pytest.approx(-15915.494309189535, rel=1e-12)
    f = np.array([1e6, 2e6])
    x = equivalent_reactance(1e-12, f)
    assert x[0] == pytest.approx(2 * x[1])
    with pytest.raises(ModelError):
        equivalent_reactance(1e-12, 0.0)


def test_active_impedance_sums_capacitances():
    dev = replace(default_nmos(), c_gd=5e-15, c_db=5e-15)
    z = active_impedance(dev, BiasPoint())
    assert z.imag == pytest.approx(equivalent_reactance(10e-15, 1e9), rel=1e-15)
    assert z.real == pytest.approx(effective_on_resistance(dev, 3.3, 0.0))


def test_parallel_and_series():
    assert parallel(100 + 0j, 100 + 0j) == 50 + 0j
    assert abs(parallel(50 + 0j, 1e12 + 0j) - 50) < 1e-6
    assert parallel(3 + 4j, 3 - 4j) == pytest.approx(25 / 6 + 0j, abs=1e-15)
    with pytest.raises(ModelError):
        parallel(1 + 1j, -1 - 1j)
    assert series(1, 2j, 3) == 4 + 2j


def test_nand_cases_golden_at_1ghz():
    model = NandGateModel()
    for (a, b), expected in Z_CASES_1GHZ.items():
        z = nand_impedance(model, a, b)
        assert z.real == pytest.approx(expected.real, rel=1e-9)
        assert z.imag == pytest.approx(expected.imag, rel=1e-9)


def test_nand_case_structure_matches_hand_composition():
    t = gate_terms(NandGateModel())

    def by_hand(pull_up, lower, upper):
        low = lower * t.z_3c / (lower + t.z_3c) + upper
        return pull_up + low * t.z_eq0 / (low + t.z_eq0)

    pa, na, pc, nc = t.p_active, t.n_active, t.p_cutoff, t.n_cutoff
    assert nand_case(t, 0, 1) == pytest.approx(by_hand(pa * pc / (pa + pc), nc, na), rel=1e-12)
    assert nand_case(t, 1, 0) == pytest.approx(by_hand(pc * pa / (pc + pa), na, nc), rel=1e-12)
    # Z01 and Z10 share the pull-up network
    assert parallel(pa, pc) == parallel(pc, pa)


def test_nand_rejects_non_bits():
    with pytest.raises(ModelError):
        nand_impedance(NandGateModel(), 2, 0)


def test_nand_vectorized_over_frequency():
    f = np.array([1e8, 1e9, 2e9])
    zs = nand_impedance(NandGateModel().at_frequency(f), 0, 1)
    for fi, zi in zip(f, zs):
        assert zi == pytest.approx(nand_impedance(NandGateModel().at_frequency(fi), 0, 1), rel=1e-12)


def test_invalid_parameters_rejected():
    with pytest.raises(ModelError):
        replace(default_nmos(), width=-1.0)
    with pytest.raises(ModelError):
        replace(default_nmos(), polarity="X")
