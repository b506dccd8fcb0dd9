import numpy as np
import pytest
from scipy.constants import h

from opticnet.edfa import (EdfaMode, EdfaOperatingPoint, edfa_apply,
                           realized_gain_db, tilt_shape_db)
from opticnet.errors import DeviceLimitError, PropagationError
from opticnet.grid import build_channel_plan
from opticnet.spectrum import PowerSpectrum
from opticnet.units import dbm_to_w, w_to_dbm

PLAN = build_channel_plan(193.5e12, 50e9, 75, 32e9)


def test_ase_added_matches_direct_formula():
    # oracle: h * f * 10^0.5 * (10^1.5 - 1) * 12.5e9 at 193.5 THz
    plan1 = build_channel_plan(193.5e12, 50e9, 1, 32e9)
    op = EdfaOperatingPoint(EdfaMode.CONSTANT_GAIN, gain_db=15.0, tilt_db=0.0,
                            nf_db=5.0)
    out = edfa_apply(PowerSpectrum.flat(plan1, -10.0), op,
                     ref_bandwidth_hz=12.5e9)
    oracle = h * 193.5e12 * 10 ** 0.5 * (10 ** 1.5 - 1) * 12.5e9
    assert out.ase_w[0] == pytest.approx(oracle, rel=1e-12)
    assert w_to_dbm(out.ase_w)[0] == pytest.approx(-38.1, abs=0.05)


def test_unity_gain_is_identity():
    op = EdfaOperatingPoint(EdfaMode.CONSTANT_GAIN, gain_db=0.0, tilt_db=0.0)
    spectrum = PowerSpectrum.flat(PLAN, -3.0)
    out = edfa_apply(spectrum, op, 32e9)
    np.testing.assert_allclose(out.signal_w, spectrum.signal_w, rtol=1e-12)
    assert np.all(out.ase_w == 0.0)


def test_tilt_is_edge_to_edge():
    # Line 1 ILA 5 working point: G 15.7 dB, T -1.0 dB
    op = EdfaOperatingPoint(EdfaMode.CONSTANT_GAIN, gain_db=15.7, tilt_db=-1.0)
    out = edfa_apply(PowerSpectrum.flat(PLAN, -15.0), op, 32e9)
    out_dbm = w_to_dbm(out.signal_w)
    assert out_dbm[-1] - out_dbm[0] == pytest.approx(-1.0, abs=1e-9)
    assert np.mean(out_dbm) == pytest.approx(-15.0 + 15.7, abs=1e-6)
    shape = tilt_shape_db(PLAN, -1.0)
    assert shape[0] == pytest.approx(0.5)
    assert shape[-1] == pytest.approx(-0.5)


def test_constant_output_power_solves_gain():
    op = EdfaOperatingPoint(EdfaMode.CONSTANT_OUTPUT_POWER, p_out_dbm=21.8,
                            tilt_db=0.0, nf_db=5.0)
    spectrum = PowerSpectrum.flat(PLAN, -10.0)
    out = edfa_apply(spectrum, op, 32e9)
    # signal total dominates; ASE addition keeps it within a whisker
    assert w_to_dbm(np.sum(out.signal_w)) == pytest.approx(21.8, abs=1e-6)
    g = realized_gain_db(spectrum, op)
    assert g == pytest.approx(21.8 - w_to_dbm(spectrum.total_power_w()),
                              abs=1e-9)


def test_gain_limits_enforced():
    with pytest.raises(DeviceLimitError):
        EdfaOperatingPoint(EdfaMode.CONSTANT_GAIN, gain_db=40.0).check_static()
    op = EdfaOperatingPoint(EdfaMode.CONSTANT_OUTPUT_POWER, p_out_dbm=23.0,
                            g_max_db=10.0)
    with pytest.raises(DeviceLimitError):
        edfa_apply(PowerSpectrum.flat(PLAN, -30.0), op, 32e9)


def test_output_power_limit_enforced():
    op = EdfaOperatingPoint(EdfaMode.CONSTANT_OUTPUT_POWER, p_out_dbm=30.0,
                            p_out_max_dbm=24.0)
    with pytest.raises(DeviceLimitError):
        edfa_apply(PowerSpectrum.flat(PLAN, -10.0), op, 32e9)


def test_input_sensitivity_floor():
    op = EdfaOperatingPoint(EdfaMode.CONSTANT_GAIN, gain_db=20.0)
    weak = PowerSpectrum.flat(PLAN, -90.0)
    with pytest.raises(PropagationError):
        edfa_apply(weak, op, 32e9)


def test_ase_probe_mode_emits_flat_comb():
    op = EdfaOperatingPoint(EdfaMode.ASE_PROBE, p_out_dbm=19.8)
    out = edfa_apply(PowerSpectrum.flat(PLAN, -60.0), op, 32e9,
                     min_input_dbm=-120.0)
    assert np.sum(out.signal_w) == pytest.approx(dbm_to_w(19.8), rel=1e-12)
    assert np.ptp(out.signal_w) == 0.0


def test_ase_input_independent_in_constant_gain():
    op = EdfaOperatingPoint(EdfaMode.CONSTANT_GAIN, gain_db=17.0, nf_db=4.5)
    a = edfa_apply(PowerSpectrum.flat(PLAN, -10.0), op, 32e9)
    b = edfa_apply(PowerSpectrum.flat(PLAN, -20.0), op, 32e9)
    np.testing.assert_allclose(a.ase_w, b.ase_w, rtol=1e-12)
