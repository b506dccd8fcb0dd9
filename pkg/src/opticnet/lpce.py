"""Lightpath computation engine.

Maps twin GSNR to feasible modulation formats per (path, channel): for every
loop-free path between two nodes it propagates the full-load comb through
the path's line systems (ROADM express loss between them), evaluates the
per-channel GSNR and grades it against the transceiver thresholds.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NotReadyError, PceError
from .line import gsnr_db, propagate_ols
from .spectrum import PowerSpectrum
from .topology import OlsState, PhyTopology
from .transceiver import FORMATS, ModulationFormat
from .units import db_to_lin

MAX_PATHS = 16
DEFAULT_TX_POWER_DBM = 0.0


@dataclass(frozen=True)
class ChannelAssessment:
    gsnr_db: float
    max_format: ModulationFormat | None
    margins_db: dict       # format name -> gsnr - (threshold + design margin)


@dataclass(frozen=True)
class PathFormatMap:
    path_id: str
    node_sequence: tuple
    ols_sequence: tuple
    entries: tuple         # ChannelAssessment per channel

    @property
    def hop_count(self) -> int:
        return len(self.ols_sequence)

    def gsnr(self) -> np.ndarray:
        return np.array([e.gsnr_db for e in self.entries])

    def supports(self, channel: int, fmt: ModulationFormat) -> bool:
        return self.entries[channel].margins_db[fmt.name] >= 0.0


def enumerate_paths(topo: PhyTopology, src: str, dst: str,
                    max_paths: int = MAX_PATHS) -> list:
    """Loop-free (node, OLS) paths, shortest first, ties by path id."""
    if src == dst:
        raise PceError(f"source and destination are both {src!r}")
    for node in (src, dst):
        if node not in topo.roadms:
            raise PceError(f"unknown node {node!r}")
    found = []

    def walk(node, visited, ols_seq):
        if node == dst:
            found.append((tuple(visited), tuple(ols_seq)))
            return
        for neighbor, ols_id in sorted(topo.neighbors(node)):
            if neighbor in visited:
                continue
            if topo.olss[ols_id].state is OlsState.FAILED:
                continue
            walk(neighbor, visited + [neighbor], ols_seq + [ols_id])

    walk(src, [src], [])
    found.sort(key=lambda p: (len(p[1]), "+".join(p[1])))
    return found[:max_paths]


def _threshold_db(topo: PhyTopology, freq_hz, endpoints, fmt) -> float:
    """Feasibility threshold for one channel: worst endpoint TRX curve.

    Channels with no designated transceiver are graded with the most
    conservative configured curve (full-spectral-load view).
    """
    thresholds = []
    for node in endpoints:
        for trx in topo.trxs_at(node):
            if abs(trx.frequency_hz - freq_hz) < 1.0:
                thresholds.append(topo.curves[trx.trx_type].threshold_db(fmt))
    if not thresholds:
        thresholds = [curve.threshold_db(fmt) for curve in topo.curves.values()]
    return max(thresholds)


def path_output_spectrum(topo: PhyTopology, node_seq, ols_seq,
                         tx_power_dbm=DEFAULT_TX_POWER_DBM) -> PowerSpectrum:
    """Full-load comb propagated across the path's OLSs at their working points."""
    src = node_seq[0]
    launch = tx_power_dbm - topo.roadms[src].add_loss_db
    spectrum = PowerSpectrum.flat(topo.plan, launch)
    for hop, ols_id in enumerate(ols_seq):
        ols = topo.olss[ols_id]
        if ols.state is not OlsState.READY:
            raise NotReadyError(f"OLS {ols_id} is {ols.state.value}")
        if hop > 0:
            express = topo.roadms[node_seq[hop]].express_loss_db
            spectrum = spectrum.scaled(db_to_lin(-express))
        spectrum = propagate_ols(spectrum, ols.descriptor())
    return spectrum


def compute_path_formats(src: str, dst: str, topo: PhyTopology,
                         design_margin_db: float = 0.0,
                         tx_power_dbm: float = DEFAULT_TX_POWER_DBM,
                         max_paths: int = MAX_PATHS) -> list:
    """One :class:`PathFormatMap` per loop-free path, shortest first."""
    paths = enumerate_paths(topo, src, dst, max_paths)
    if not paths:
        raise PceError(f"no path between {src!r} and {dst!r}")
    maps = []
    freqs = topo.plan.frequencies()
    for node_seq, ols_seq in paths:
        spectrum = path_output_spectrum(topo, node_seq, ols_seq, tx_power_dbm)
        gsnr = gsnr_db(spectrum)
        entries = []
        for channel in range(topo.plan.channel_count):
            margins = {}
            best = None
            for fmt in FORMATS:
                threshold = _threshold_db(topo, freqs[channel], (src, dst), fmt)
                margins[fmt.name] = float(gsnr[channel]) - threshold \
                    - design_margin_db
                if margins[fmt.name] >= 0.0 and \
                        (best is None or fmt.cardinality > best.cardinality):
                    best = fmt
            entries.append(ChannelAssessment(gsnr_db=float(gsnr[channel]),
                                             max_format=best,
                                             margins_db=margins))
        maps.append(PathFormatMap(path_id="+".join(ols_seq),
                                  node_sequence=node_seq,
                                  ols_sequence=ols_seq,
                                  entries=tuple(entries)))
    return maps


def compute_margin(estimated_gsnr_db: float, predicted_gsnr_db: float) -> float:
    """Signed margin of an estimate over the twin prediction, dB."""
    if not (np.isfinite(estimated_gsnr_db) and np.isfinite(predicted_gsnr_db)):
        raise PceError("margin needs finite GSNR values")
    return float(estimated_gsnr_db - predicted_gsnr_db)
