"""Coherent transceiver back-to-back characterization.

BER-vs-SNR curves per modulation format, built from the analytic AWGN
formulas for Gray-coded DP-QPSK and DP-16QAM plus a per-(pluggable type,
format) implementation penalty, or loaded from a tabular file.  SNR here is
Es/N0 at the symbol rate, the same reference bandwidth the line GSNR uses.
The pre-FEC BER threshold defining format feasibility is 1e-2.
"""

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.special import erfc

from .errors import BerRangeError

PRE_FEC_BER = 1e-2

# Analytic curves end here; a measured BER below the curve floor only bounds
# the SNR from below.
BER_FLOOR = 1e-24

# Implementation penalty in dB added on top of the ideal AWGN curve.  ACO
# pluggables are the weaker analog variant; the penalty grows steeply with
# constellation cardinality.
DEFAULT_PENALTIES_DB = {
    ("DCO", "DP-QPSK"): 0.5,
    ("ACO", "DP-QPSK"): 1.5,
    ("DCO", "DP-16QAM"): 6.5,
    ("ACO", "DP-16QAM"): 7.5,
}


@dataclass(frozen=True)
class ModulationFormat:
    name: str
    rate_gbps: int
    cardinality: int

    def __post_init__(self):
        if (self.name, self.rate_gbps, self.cardinality) not in (
                ("DP-QPSK", 100, 4), ("DP-16QAM", 200, 16)):
            raise ValueError(f"unsupported format {self.name}/{self.rate_gbps}G")


DP_QPSK = ModulationFormat("DP-QPSK", 100, 4)
DP_16QAM = ModulationFormat("DP-16QAM", 200, 16)
FORMATS = (DP_QPSK, DP_16QAM)
FORMATS_BY_NAME = {f.name: f for f in FORMATS}


def awgn_ber(snr_db, fmt: ModulationFormat):
    """Ideal Gray-coded BER at the given Es/N0 (dual polarization)."""
    snr = 10.0 ** (np.asarray(snr_db, dtype=float) / 10.0)
    if fmt.cardinality == 4:
        # QPSK: Q(sqrt(Es/N0)) per bit
        return 0.5 * erfc(np.sqrt(snr / 2.0))
    # 16QAM: (3/4) Q(sqrt(Es/N0 / 5))
    return 0.75 * 0.5 * erfc(np.sqrt(snr / 10.0))


def awgn_threshold_db(fmt: ModulationFormat, ber=PRE_FEC_BER) -> float:
    """SNR where the ideal curve crosses the pre-FEC BER threshold."""
    return brentq(lambda s: awgn_ber(s, fmt) - ber, -5.0, 40.0, xtol=1e-9)


@dataclass(frozen=True)
class _FormatCurve:
    """Monotone BER(SNR) mapping for one format on one pluggable type."""

    fmt: ModulationFormat
    snr_grid_db: tuple
    ber_grid: tuple
    snr_threshold_db: float

    def ber(self, snr_db: float) -> float:
        s = np.clip(snr_db, self.snr_grid_db[0], self.snr_grid_db[-1])
        # interpolate in log-BER, linear in SNR dB
        log_ber = np.interp(s, self.snr_grid_db, np.log(self.ber_grid))
        return float(np.exp(log_ber))

    def snr(self, ber: float) -> float:
        floor = self.ber_grid[-1]
        if ber >= 0.5:
            raise BerRangeError(f"BER {ber:.3g} >= 0.5: no signal")
        if ber > self.ber_grid[0]:
            raise BerRangeError(
                f"BER {ber:.3g} above curve ceiling {self.ber_grid[0]:.3g}")
        if ber < floor:
            raise BerRangeError(
                f"BER {ber:.3g} below curve floor {floor:.3g}; SNR at least "
                f"{self.snr_grid_db[-1]:.2f} dB",
                snr_lower_bound_db=self.snr_grid_db[-1])
        log_grid = np.log(np.asarray(self.ber_grid))
        return float(np.interp(np.log(ber), log_grid[::-1],
                               np.asarray(self.snr_grid_db)[::-1]))


@dataclass(frozen=True)
class TrxB2BCurve:
    """Back-to-back BER/SNR characterization of one pluggable type."""

    trx_type: str                      # "ACO" | "DCO"
    curves: dict = field(default_factory=dict)   # format name -> _FormatCurve

    def __post_init__(self):
        if self.trx_type not in ("ACO", "DCO"):
            raise ValueError(f"unknown pluggable type {self.trx_type!r}")
        qpsk = self.curves["DP-QPSK"].snr_threshold_db
        qam = self.curves["DP-16QAM"].snr_threshold_db
        if qam <= qpsk:
            raise ValueError("16QAM threshold must exceed QPSK threshold")

    def threshold_db(self, fmt: ModulationFormat) -> float:
        return self.curves[fmt.name].snr_threshold_db

    def ber_at(self, snr_db: float, fmt: ModulationFormat) -> float:
        return self.curves[fmt.name].ber(snr_db)


def analytic_curve(trx_type: str, penalties_db=None,
                   snr_min_db=-2.0, snr_max_db=30.0, points=641) -> TrxB2BCurve:
    """Sampled analytic AWGN curves shifted by the implementation penalty."""
    penalties = dict(DEFAULT_PENALTIES_DB)
    if penalties_db:
        penalties.update({(trx_type, k): v for k, v in penalties_db.items()})
    curves = {}
    for fmt in FORMATS:
        pen = penalties[(trx_type, fmt.name)]
        grid = np.linspace(snr_min_db, snr_max_db, points)
        ber = awgn_ber(grid - pen, fmt)
        keep = ber >= BER_FLOOR
        thr = awgn_threshold_db(fmt) + pen
        curves[fmt.name] = _FormatCurve(fmt, tuple(grid[keep]),
                                        tuple(ber[keep]), thr)
    return TrxB2BCurve(trx_type, curves)


def load_curve_table(path, trx_type: str) -> TrxB2BCurve:
    """Load measured (SNR dB, BER) pairs per format from a JSON table.

    Expected document: {"DP-QPSK": [[snr_db, ber], ...], "DP-16QAM": [...]}.
    Points must be sorted by SNR with strictly decreasing BER.
    """
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    curves = {}
    for fmt in FORMATS:
        pairs = doc[fmt.name]
        snr = np.array([p[0] for p in pairs], dtype=float)
        ber = np.array([p[1] for p in pairs], dtype=float)
        if np.any(np.diff(snr) <= 0) or np.any(np.diff(ber) >= 0):
            raise ValueError(f"{fmt.name}: BER must strictly decrease in SNR")
        log_ber = np.log(ber)
        thr = float(np.interp(np.log(PRE_FEC_BER), log_ber[::-1], snr[::-1]))
        curves[fmt.name] = _FormatCurve(fmt, tuple(snr), tuple(ber), thr)
    return TrxB2BCurve(trx_type, curves)


def ber_to_snr(ber: float, fmt: ModulationFormat, curve: TrxB2BCurve) -> float:
    """SNR (dB) such that the curve's BER matches, monotone inverse."""
    return curve.curves[fmt.name].snr(ber)
