import numpy as np
import pytest

from opticnet.errors import PropagationError
from opticnet.fiber import (FiberSpanParams, LossFunction,
                            srs_exchange_factors, span_transfer)
from opticnet.grid import build_channel_plan
from opticnet.spectrum import PowerSpectrum
from opticnet.units import w_to_dbm

PLAN = build_channel_plan(193.5e12, 50e9, 75, 32e9)


def make_span(**overrides):
    params = dict(length_km=65.5, raman_efficiency=0.34,
                  dispersion_ps_nm_km=16.6, loss=LossFunction.flat(0.20),
                  input_loss_db=5.5, output_loss_db=0.1)
    params.update(overrides)
    return FiberSpanParams(**params)


def test_line1_span1_mean_loss_and_tilt_sign():
    # 5.5 dB input connector + 65.5 km at 0.20 dB/km + 0.1 dB output
    span = make_span()
    out = span_transfer(PowerSpectrum.flat(PLAN, 0.0), span)
    out_dbm = w_to_dbm(out.signal_w)
    expected = -(5.5 + 0.20 * 65.5 + 0.1)
    assert np.mean(out_dbm) == pytest.approx(expected, abs=0.05)
    # SRS moves power toward low frequencies: red (low f) above blue (high f)
    assert out_dbm[0] > out_dbm[-1]


def test_zero_length_limit_is_identity():
    span = make_span(length_km=1e-9, input_loss_db=0.0, output_loss_db=0.0)
    spectrum = PowerSpectrum.flat(PLAN, 0.0)
    out = span_transfer(spectrum, span)
    np.testing.assert_allclose(out.signal_w, spectrum.signal_w, rtol=1e-9)


def test_single_channel_has_no_tilt():
    plan1 = build_channel_plan(193.5e12, 50e9, 1, 32e9)
    span = make_span(raman_efficiency=0.8, input_loss_db=1.0, output_loss_db=0.5)
    out = span_transfer(PowerSpectrum.flat(plan1, 3.0), span)
    expected_db = -(1.0 + 0.20 * 65.5 + 0.5)
    assert w_to_dbm(out.signal_w)[0] == pytest.approx(3.0 + expected_db, abs=1e-9)


def test_srs_zero_sum_before_loss():
    span = make_span(length_km=100.0, raman_efficiency=0.44)
    spectrum = PowerSpectrum.flat(PLAN, 3.0)
    launch = spectrum.total_w()
    factors = srs_exchange_factors(PLAN, launch, span)
    assert np.sum(launch * factors) == pytest.approx(np.sum(launch), rel=1e-12)
    # the exchange favors the low-frequency end and is not a no-op
    assert factors[0] > 1.0 > factors[-1]


def test_lumped_losses_count_and_validate():
    span = make_span(lumped_losses=((10.0, 0.7), (30.0, 0.5)))
    out = span_transfer(PowerSpectrum.flat(PLAN, 0.0), span)
    expected = -(5.5 + 0.20 * 65.5 + 0.7 + 0.5 + 0.1)
    assert np.mean(w_to_dbm(out.signal_w)) == pytest.approx(expected, abs=0.05)
    with pytest.raises(PropagationError):
        make_span(lumped_losses=((70.0, 0.7),))
    with pytest.raises(PropagationError):
        make_span(lumped_losses=((10.0, -0.5),))


def test_invalid_span_parameters_rejected():
    with pytest.raises(PropagationError):
        make_span(length_km=0.0)
    with pytest.raises(PropagationError):
        make_span(input_loss_db=-1.0)
    with pytest.raises(PropagationError):
        make_span(loss=LossFunction.flat(-0.2))


def test_noise_attenuates_like_signal():
    span = make_span()
    base = np.full(75, 1e-3)
    spectrum = PowerSpectrum(PLAN, base, base * 1e-3, base * 1e-4)
    out = span_transfer(spectrum, span)
    np.testing.assert_allclose(out.ase_w / spectrum.ase_w,
                               out.signal_w / spectrum.signal_w, rtol=1e-12)
    np.testing.assert_allclose(out.nli_w / spectrum.nli_w,
                               out.signal_w / spectrum.signal_w, rtol=1e-12)


def test_piecewise_linear_loss_function():
    lf = LossFunction.from_knots((191.65e12, 193.5e12, 195.35e12),
                                 (0.18, 0.20, 0.22))
    assert lf.db_per_km(193.5e12)[0] == pytest.approx(0.20)
    assert lf.db_per_km(192.575e12)[0] == pytest.approx(0.19)
    assert lf.mean_db_per_km(PLAN) == pytest.approx(0.20, abs=1e-3)
