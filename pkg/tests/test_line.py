import numpy as np
import pytest

from opticnet.edfa import EdfaMode, EdfaOperatingPoint
from opticnet.errors import PropagationError
from opticnet.fiber import FiberSpanParams, LossFunction
from opticnet.grid import build_channel_plan
from opticnet.line import OlsDescriptor, gsnr_db, propagate_ols
from opticnet.spectrum import PowerSpectrum

PLAN = build_channel_plan(193.5e12, 50e9, 75, 32e9)


def unity(nf_db=5.0):
    return EdfaOperatingPoint(EdfaMode.CONSTANT_GAIN, gain_db=0.0, nf_db=nf_db)


def flat_span(length_km=65.0, loss_db_km=0.2, c_r=0.0, **kw):
    return FiberSpanParams(length_km=length_km, raman_efficiency=c_r,
                           dispersion_ps_nm_km=16.7,
                           loss=LossFunction.flat(loss_db_km),
                           input_loss_db=kw.pop("input_loss_db", 0.0),
                           output_loss_db=kw.pop("output_loss_db", 0.0), **kw)


def compensating_ols(n_spans, nf_db=5.0, c_r=0.0, ols_id="test"):
    span = flat_span(c_r=c_r)
    gain = 0.2 * 65.0
    amp = EdfaOperatingPoint(EdfaMode.CONSTANT_GAIN, gain_db=gain, nf_db=nf_db)
    return OlsDescriptor(ols_id, booster=unity(nf_db),
                         spans=(span,) * n_spans,
                         ilas=(amp,) * (n_spans - 1), preamp=amp)


def test_zero_span_ols_is_identity():
    ols = OlsDescriptor("degenerate", booster=unity(), spans=(), ilas=(),
                        preamp=unity())
    spectrum = PowerSpectrum.flat(PLAN, -3.0)
    out = propagate_ols(spectrum, ols)
    np.testing.assert_allclose(out.signal_w, spectrum.signal_w, rtol=1e-12)
    assert np.all(out.ase_w == 0.0)


def test_gsnr_arithmetic():
    plan1 = build_channel_plan(193.5e12, 50e9, 1, 32e9)
    s = PowerSpectrum(plan1, [1e-3], [10e-6], [0.0])
    assert gsnr_db(s)[0] == pytest.approx(20.0, abs=1e-9)
    s2 = PowerSpectrum(plan1, [1e-3], [10e-6], [10e-6])
    assert gsnr_db(s2)[0] == pytest.approx(16.9897, abs=1e-3)


def test_gsnr_zero_noise_is_error():
    plan1 = build_channel_plan(193.5e12, 50e9, 1, 32e9)
    with pytest.raises(PropagationError):
        gsnr_db(PowerSpectrum(plan1, [1e-3], [0.0], [0.0]))


def test_incoherent_accumulation_over_identical_spans():
    one = compensating_ols(1)
    four = compensating_ols(4)
    spectrum = PowerSpectrum.flat(PLAN, 0.0)
    g1 = 10 ** (gsnr_db(propagate_ols(spectrum, one)) / 10)
    g4 = 10 ** (gsnr_db(propagate_ols(spectrum, four)) / 10)
    np.testing.assert_allclose(1.0 / g4, 4.0 / g1, rtol=1e-6)


def test_appending_stage_never_increases_gsnr():
    base = compensating_ols(2, c_r=0.3)
    longer = compensating_ols(3, c_r=0.3)
    spectrum = PowerSpectrum.flat(PLAN, 1.0)
    assert np.all(gsnr_db(propagate_ols(spectrum, longer))
                  <= gsnr_db(propagate_ols(spectrum, base)) + 1e-12)


def test_linear_part_scales_exactly_without_nli():
    # Loss + constant gain are linear in input power (SRS, being driven by
    # total power, is exercised separately).
    ols = compensating_ols(3, c_r=0.0)
    a = propagate_ols(PowerSpectrum.flat(PLAN, -3.0), ols, include_nli=False)
    b = propagate_ols(PowerSpectrum.flat(PLAN, -3.0).scaled(2.5), ols,
                      include_nli=False)
    np.testing.assert_allclose(b.signal_w, 2.5 * a.signal_w, rtol=1e-12)
    np.testing.assert_allclose(b.ase_w, a.ase_w, rtol=1e-12)


def test_two_identical_spans_double_the_nli():
    # Exact gain compensation, no SRS: NLI accumulates incoherently.
    one = compensating_ols(1)
    two = compensating_ols(2)
    spectrum = PowerSpectrum.flat(PLAN, 0.0)
    nli1 = propagate_ols(spectrum, one).nli_w
    nli2 = propagate_ols(spectrum, two).nli_w
    np.testing.assert_allclose(nli2, 2.0 * nli1, rtol=1e-9)


def test_errors_annotated_with_element():
    bad_amp = EdfaOperatingPoint(EdfaMode.CONSTANT_OUTPUT_POWER, p_out_dbm=23.0,
                                 g_max_db=5.0)
    ols = OlsDescriptor("lineX", booster=unity(), spans=(flat_span(),),
                        ilas=(), preamp=bad_amp)
    with pytest.raises(PropagationError, match="lineX.*PRE"):
        propagate_ols(PowerSpectrum.flat(PLAN, -30.0), ols)


def test_mismatched_ila_count_rejected():
    with pytest.raises(PropagationError):
        OlsDescriptor("bad", booster=unity(), spans=(flat_span(),) * 3,
                      ilas=(unity(),), preamp=unity())
