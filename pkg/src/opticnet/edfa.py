"""Parametric EDFA model: flat gain plus linear tilt, ASE from a noise figure.

The model is intentionally table-free: gain is ``G + T * (f - f_c) / B`` in
dB (T is the edge-to-edge tilt across the band, negative = more gain toward
low frequencies) and the added ASE per channel follows the standard
``h f NF (G - 1) B_ref`` formula.  A learned, table-driven model can be
substituted through the same :class:`AmplifierModel` interface.
"""

import enum
from dataclasses import dataclass, replace

import numpy as np

from .errors import DeviceLimitError, PropagationError
from .grid import ChannelPlan
from .spectrum import PowerSpectrum
from .units import PLANCK, db_to_lin, dbm_to_w, lin_to_db


class EdfaMode(enum.Enum):
    CONSTANT_GAIN = "constant_gain"
    CONSTANT_OUTPUT_POWER = "constant_output_power"
    ASE_PROBE = "ase_probe"


# Device setting tolerance: solved gains this close to a limit are accepted.
LIMIT_TOL_DB = 0.05


@dataclass(frozen=True)
class EdfaOperatingPoint:
    """Working point of one amplifier plus the device limits that bound it.

    In CONSTANT_GAIN mode ``gain_db`` is authoritative and the output power
    is whatever results; in CONSTANT_OUTPUT_POWER mode ``p_out_dbm`` is
    authoritative and the flat gain is solved per spectrum.  ASE_PROBE mode
    replaces the input with a flat noise comb at ``p_out_dbm`` total.
    """

    mode: EdfaMode
    gain_db: float = 0.0
    tilt_db: float = 0.0
    p_out_dbm: float = 0.0
    nf_db: float = 5.0
    g_min_db: float = 0.0
    g_max_db: float = 35.0
    p_out_max_dbm: float = 24.0

    def check_static(self):
        if self.mode is EdfaMode.CONSTANT_GAIN:
            if not self.g_min_db <= self.gain_db <= self.g_max_db:
                raise DeviceLimitError(
                    f"gain {self.gain_db:.2f} dB outside "
                    f"[{self.g_min_db}, {self.g_max_db}] dB")
        if self.mode in (EdfaMode.CONSTANT_OUTPUT_POWER, EdfaMode.ASE_PROBE):
            if self.p_out_dbm > self.p_out_max_dbm:
                raise DeviceLimitError(
                    f"output power {self.p_out_dbm:.2f} dBm above device "
                    f"maximum {self.p_out_max_dbm:.2f} dBm")

    def with_gain(self, gain_db) -> "EdfaOperatingPoint":
        return replace(self, gain_db=float(gain_db))


def tilt_shape_db(plan: ChannelPlan, tilt_db: float) -> np.ndarray:
    """Per-channel tilt contribution in dB; zero at band center."""
    freqs = plan.frequencies()
    width = plan.f_max - plan.f_min
    if width <= 0:
        return np.zeros(plan.channel_count)
    return tilt_db * (freqs - plan.center_hz) / width


def solve_gain_for_output(spectrum: PowerSpectrum, op: EdfaOperatingPoint) -> float:
    """Flat gain (dB) making total signal output match the power target."""
    tilt_lin = db_to_lin(tilt_shape_db(spectrum.plan, op.tilt_db))
    weighted = float(np.sum(spectrum.total_w() * tilt_lin))
    if weighted <= 0:
        raise PropagationError("cannot set output power on an empty spectrum")
    return float(lin_to_db(dbm_to_w(op.p_out_dbm) / weighted))


def ase_power_w(freq_hz, nf_db, gain_lin, ref_bandwidth_hz) -> np.ndarray:
    """ASE added per channel: h f NF (G - 1) B, clamped at G <= 1."""
    g = np.maximum(np.asarray(gain_lin, dtype=float) - 1.0, 0.0)
    return PLANCK * np.asarray(freq_hz, dtype=float) * db_to_lin(nf_db) * g \
        * ref_bandwidth_hz


def edfa_apply(spectrum: PowerSpectrum, op: EdfaOperatingPoint,
               ref_bandwidth_hz: float,
               min_input_dbm: float = -60.0) -> PowerSpectrum:
    """Amplify a spectrum at the given working point, adding ASE.

    ``ref_bandwidth_hz`` is the bandwidth in which the added ASE per channel
    is accounted (the GSNR reference bandwidth).  ``min_input_dbm`` is the
    total-input sensitivity floor.
    """
    plan = spectrum.plan
    op.check_static()
    if op.mode is EdfaMode.ASE_PROBE:
        per_ch = dbm_to_w(op.p_out_dbm) / plan.channel_count
        flat = np.full(plan.channel_count, per_ch)
        zero = np.zeros(plan.channel_count)
        return PowerSpectrum(plan, flat, zero, zero.copy())

    total_in = spectrum.total_power_w()
    if total_in < dbm_to_w(min_input_dbm):
        raise PropagationError(
            f"total input power below the {min_input_dbm:.1f} dBm "
            "sensitivity floor")

    if op.mode is EdfaMode.CONSTANT_OUTPUT_POWER:
        gain_db = solve_gain_for_output(spectrum, op)
        if not (op.g_min_db - LIMIT_TOL_DB <= gain_db
                <= op.g_max_db + LIMIT_TOL_DB):
            raise DeviceLimitError(
                f"required gain {gain_db:.2f} dB outside "
                f"[{op.g_min_db}, {op.g_max_db}] dB for output "
                f"{op.p_out_dbm:.2f} dBm")
    else:
        gain_db = op.gain_db

    g_lin = db_to_lin(gain_db + tilt_shape_db(plan, op.tilt_db))
    amplified = spectrum.scaled(g_lin)
    ase = ase_power_w(plan.frequencies(), op.nf_db, g_lin, ref_bandwidth_hz)
    return PowerSpectrum(plan, amplified.signal_w, amplified.ase_w + ase,
                         amplified.nli_w)


def realized_gain_db(spectrum: PowerSpectrum, op: EdfaOperatingPoint) -> float:
    """Flat-gain value the amplifier will actually apply on this input."""
    if op.mode is EdfaMode.CONSTANT_OUTPUT_POWER:
        return solve_gain_for_output(spectrum, op)
    return op.gain_db
