"""Optical line system composition and GSNR evaluation.

An OLS is a booster, a chain of fiber spans each followed by an in-line
amplifier (the last span is closed by the pre-amplifier instead), bracketed
by the ROADM-integrated booster and pre-amplifier.  Per span the order is:
NLI generation at launch, span transfer, amplification.
"""

from dataclasses import dataclass

import numpy as np

from .edfa import EdfaOperatingPoint, edfa_apply
from .errors import OpticnetError, PropagationError
from .fiber import span_transfer
from .nli import nli_span
from .spectrum import PowerSpectrum
from .units import lin_to_db


@dataclass(frozen=True)
class OlsDescriptor:
    """ROADM-to-ROADM amplified line.

    ``ilas[i]`` follows ``spans[i]``; the final span is closed by ``preamp``.
    A degenerate zero-span line (booster straight into pre-amplifier) is
    allowed and propagates as the identity when both are at unity gain.
    """

    ols_id: str
    booster: EdfaOperatingPoint
    spans: tuple               # FiberSpanParams
    ilas: tuple                # EdfaOperatingPoint, len = max(len(spans)-1, 0)
    preamp: EdfaOperatingPoint
    endpoint_a: str = ""
    endpoint_b: str = ""

    def __post_init__(self):
        object.__setattr__(self, "spans", tuple(self.spans))
        object.__setattr__(self, "ilas", tuple(self.ilas))
        expected = max(len(self.spans) - 1, 0)
        if len(self.ilas) != expected:
            raise PropagationError(
                f"OLS {self.ols_id}: {len(self.spans)} spans need {expected} "
                f"in-line amplifiers, got {len(self.ilas)}")

    @property
    def span_count(self) -> int:
        return len(self.spans)

    def all_amps(self) -> tuple:
        """(booster, ILAs..., preamp) in propagation order."""
        return (self.booster,) + self.ilas + (self.preamp,)

    def amp_labels(self) -> tuple:
        return ("BST",) + tuple(f"ILA {i + 1}" for i in range(len(self.ilas))) \
            + ("PRE",)


def propagate_ols(spectrum: PowerSpectrum, ols: OlsDescriptor,
                  ref_bandwidth_hz: float | None = None,
                  include_nli: bool = True) -> PowerSpectrum:
    """Propagate a spectrum through a full OLS.

    The ASE/GSNR reference bandwidth defaults to the plan symbol rate so the
    resulting GSNR is directly comparable with transceiver thresholds.
    """
    plan = spectrum.plan
    bw = plan.symbol_rate_baud if ref_bandwidth_hz is None else ref_bandwidth_hz

    def step(state, fn, label):
        try:
            return fn(state)
        except OpticnetError as exc:
            raise PropagationError(f"OLS {ols.ols_id} [{label}]: {exc}") from exc

    current = step(spectrum, lambda s: edfa_apply(s, ols.booster, bw), "BST")
    for i, span in enumerate(ols.spans):
        if include_nli:
            current = step(current,
                           lambda s: s.with_added_nli(nli_span(s, span)),
                           f"span {i + 1} NLI")
        current = step(current, lambda s: span_transfer(s, span),
                       f"span {i + 1}")
        if i < len(ols.ilas):
            amp = ols.ilas[i]
            current = step(current, lambda s: edfa_apply(s, amp, bw),
                           f"ILA {i + 1}")
    return step(current, lambda s: edfa_apply(s, ols.preamp, bw), "PRE")


def gsnr_db(spectrum: PowerSpectrum) -> np.ndarray:
    """Per-channel GSNR: signal over accumulated ASE + NLI, in dB."""
    noise = spectrum.ase_w + spectrum.nli_w
    if np.any(noise <= 0):
        raise PropagationError(
            "zero accumulated noise on some channel; GSNR undefined")
    return np.asarray(lin_to_db(spectrum.signal_w / noise))


def snr_components_db(spectrum: PowerSpectrum) -> tuple:
    """(SNR_ase, SNR_nli) per channel in dB, for diagnostic reports."""
    s_ase = np.where(spectrum.ase_w > 0,
                     lin_to_db(spectrum.signal_w / np.maximum(spectrum.ase_w, 1e-300)),
                     np.inf)
    s_nli = np.where(spectrum.nli_w > 0,
                     lin_to_db(spectrum.signal_w / np.maximum(spectrum.nli_w, 1e-300)),
                     np.inf)
    return s_ase, s_nli
