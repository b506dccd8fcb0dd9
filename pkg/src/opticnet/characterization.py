"""Physical-layer probing and span parameter estimation.

Each span is characterized from one OTDR trace and two flat ASE probe
spectra at distinct launch levels, read by the optical channel monitors at
both span terminals.  The OTDR is authoritative for the span length and for
connector/lumped loss values (events within MERGE_WINDOW_KM of a span end
are merged into the connector losses); the remaining parameters -- the
Raman efficiency and the loss-coefficient knots -- are fitted by nonlinear
least squares on the dB residuals between predicted and measured output
spectra across both probe levels.

Identifiability note: from OCM spectra alone the input connector loss, the
mean loss coefficient and the Raman efficiency form a degenerate family
(only ``l0 + mean(alpha) L`` and ``C_R 10^{-l0/10}`` are observable, even
with two probe levels), which is why the connectors are pinned to the OTDR
events instead of being free fit variables.
"""

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .errors import FitError, ProbeError, TopologyError
from .fiber import (FiberSpanParams, LossFunction, default_knot_frequencies,
                    span_transfer)
from .grid import ChannelPlan
from .spectrum import PowerSpectrum
from .topology import OlsPhy, PhyTopology
from .units import dbm_to_w, w_to_dbm

MERGE_WINDOW_KM = 0.5

# Probe levels relative to the weakest amplifier's maximum output power.
# The wide lever arm is what makes the Raman efficiency identifiable at
# realistic monitor noise; the low level stays far above OCM sensitivity.
DEFAULT_PROBE_OFFSETS_DB = (-0.5, -14.0)


@dataclass(frozen=True)
class OtdrTrace:
    span_id: str
    measured_length_km: float
    events: tuple            # ((position_km, loss_db), ...)
    noise_sigma_db: float = 0.0

    def __post_init__(self):
        if self.measured_length_km <= 0:
            raise ProbeError(f"{self.span_id}: OTDR length must be > 0")
        events = tuple((float(z), float(l)) for z, l in self.events)
        for z, _ in events:
            if not 0.0 < z < self.measured_length_km:
                raise ProbeError(
                    f"{self.span_id}: OTDR event at {z} km outside span")
        object.__setattr__(self, "events", events)


@dataclass(frozen=True)
class AseProbeRecord:
    span_id: str
    probe_level_index: int          # 0 or 1
    input_dbm: tuple                # OCM at span input, per channel
    output_dbm: tuple               # OCM at span output, per channel

    def __post_init__(self):
        if self.probe_level_index not in (0, 1):
            raise ProbeError("probe_level_index must be 0 or 1")
        object.__setattr__(self, "input_dbm",
                           tuple(float(x) for x in self.input_dbm))
        object.__setattr__(self, "output_dbm",
                           tuple(float(x) for x in self.output_dbm))


@dataclass(frozen=True)
class CharacterizationRecord:
    span_id: str
    fitted: FiberSpanParams
    residual_rms_db: float
    timestamp: float = 0.0

    def __post_init__(self):
        if self.residual_rms_db < 0:
            raise FitError("residual_rms must be >= 0")


@dataclass(frozen=True)
class SpanFitConfig:
    """Static knowledge the fit needs beyond the telemetry itself."""

    plan: ChannelPlan
    dispersion_ps_nm_km: float
    gamma: float = 1.27e-3
    knot_count: int = 5
    alpha_bounds_db_km: tuple = (0.14, 0.30)
    raman_bounds: tuple = (0.05, 1.0)
    reject_threshold_db: float = 0.5
    max_evaluations: int = 500


def run_probe_sequence(olc) -> tuple:
    """Drive the probing procedure for one OLS through its line controller.

    Returns (traces, probe_pairs): one OTDR trace per span and a pair of ASE
    probe records per span at two distinct levels.  The equipment is
    restored to idle afterward; nothing is returned on failure.
    """
    if olc.span_count() == 0:
        raise ProbeError(f"OLS {olc.ols_id}: nothing to probe (0 spans)")
    levels = [olc.max_probe_power_dbm() + off for off in olc.probe_offsets_db()]
    if abs(levels[0] - levels[1]) < 0.5:
        raise ProbeError("probe levels must be distinct")
    traces = []
    probe_pairs = []
    try:
        for span_index in range(olc.span_count()):
            traces.append(olc.otdr_trace(span_index))
            pair = []
            for level_index, level_dbm in enumerate(levels):
                input_dbm, output_dbm = olc.probe_span(span_index, level_dbm)
                pair.append(AseProbeRecord(
                    span_id=traces[-1].span_id,
                    probe_level_index=level_index,
                    input_dbm=input_dbm, output_dbm=output_dbm))
            probe_pairs.append(tuple(pair))
    finally:
        olc.restore_idle()
    return tuple(traces), tuple(probe_pairs)


def merge_end_events(trace: OtdrTrace) -> tuple:
    """(l0_db, lls_db, interior_events) with end events folded into connectors."""
    l0 = 0.0
    lls = 0.0
    interior = []
    for z, loss in trace.events:
        if z <= MERGE_WINDOW_KM:
            l0 += loss
        elif z >= trace.measured_length_km - MERGE_WINDOW_KM:
            lls += loss
        else:
            interior.append((z, loss))
    return l0, lls, tuple(interior)


def _tilt_slope_db_per_hz(freqs, input_dbm, output_dbm):
    """Linear slope of the span loss spectrum in dB per Hz."""
    diff = np.asarray(output_dbm) - np.asarray(input_dbm)
    return float(np.polyfit(freqs, diff, 1)[0])


def _initial_guess(trace, probes, config, l0_db, lls_db, interior):
    plan = config.plan
    freqs = plan.frequencies()
    length = trace.measured_length_km
    in0 = np.asarray(probes[0].input_dbm)
    out0 = np.asarray(probes[0].output_dbm)
    total_span_loss = float(np.mean(in0 - out0))
    lumped = l0_db + lls_db + sum(l for _, l in interior)
    alpha0 = (total_span_loss - lumped) / length
    lo, hi = config.alpha_bounds_db_km
    alpha0 = min(max(alpha0, lo + 1e-4), hi - 1e-4)

    # Raman efficiency from the inter-level tilt difference: the linear part
    # of the loss spectrum cancels between levels, the SRS part scales with
    # the launch power difference.
    s = [_tilt_slope_db_per_hz(freqs, p.input_dbm, p.output_dbm)
         for p in probes]
    p_tot = [np.sum(dbm_to_w(np.asarray(p.input_dbm))) for p in probes]
    a_lin = alpha0 / (10 / np.log(10))
    l_eff = (1 - np.exp(-a_lin * length)) / a_lin
    denom = (10 / np.log(10)) * l_eff * (p_tot[0] - p_tot[1]) \
        * 10 ** (-l0_db / 10.0)
    c_r0 = 0.3
    if abs(denom) > 1e-12:
        from .fiber import RAMAN_REFERENCE_SHIFT_HZ
        c_r0 = (s[0] - s[1]) * RAMAN_REFERENCE_SHIFT_HZ / denom
    lo, hi = config.raman_bounds
    return float(min(max(c_r0, lo + 1e-3), hi - 1e-3)), alpha0


def fit_span(trace: OtdrTrace, probes, config: SpanFitConfig,
             timestamp: float = 0.0) -> CharacterizationRecord:
    """Fit one span's parameters so the twin reproduces the probe telemetry."""
    if len(probes) != 2:
        raise FitError(f"{trace.span_id}: need exactly two probe records")
    if any(p.span_id != trace.span_id for p in probes):
        raise FitError(f"{trace.span_id}: probe records from a different span")
    p_tot = [float(np.sum(dbm_to_w(np.asarray(p.input_dbm)))) for p in probes]
    if abs(w_to_dbm(p_tot[0]) - w_to_dbm(p_tot[1])) < 0.5:
        raise FitError(
            f"{trace.span_id}: probe levels identical; Raman efficiency is "
            "unidentifiable (loss and SRS degenerate at a single level)")

    plan = config.plan
    length = trace.measured_length_km
    l0_db, lls_db, interior = merge_end_events(trace)
    knots = default_knot_frequencies(plan, config.knot_count)
    c_r0, alpha0 = _initial_guess(trace, probes, config, l0_db, lls_db,
                                  interior)

    # The probe comb is flat by construction, so the 75 input readings are
    # averaged into a single level estimate instead of being used point-wise.
    inputs_w = [np.full(plan.channel_count,
                        dbm_to_w(float(np.mean(p.input_dbm))))
                for p in probes]
    measured = np.concatenate([np.asarray(p.output_dbm) for p in probes])
    zeros = np.zeros(plan.channel_count)

    def make_span(x):
        c_r, alpha_knots = x[0], x[1:]
        return FiberSpanParams(
            length_km=length, raman_efficiency=c_r,
            dispersion_ps_nm_km=config.dispersion_ps_nm_km,
            loss=LossFunction.from_knots(knots, alpha_knots),
            input_loss_db=l0_db, output_loss_db=lls_db,
            lumped_losses=interior, gamma=config.gamma)

    def residuals(x):
        span = make_span(x)
        predicted = []
        for p_in in inputs_w:
            spectrum = PowerSpectrum(plan, p_in, zeros, zeros)
            predicted.append(w_to_dbm(span_transfer(spectrum, span).signal_w))
        return np.concatenate(predicted) - measured

    x0 = np.array([c_r0] + [alpha0] * config.knot_count)
    lower = np.array([config.raman_bounds[0]]
                     + [config.alpha_bounds_db_km[0]] * config.knot_count)
    upper = np.array([config.raman_bounds[1]]
                     + [config.alpha_bounds_db_km[1]] * config.knot_count)
    result = least_squares(residuals, x0, bounds=(lower, upper),
                           max_nfev=config.max_evaluations, xtol=1e-14,
                           ftol=1e-14, gtol=1e-14)
    if result.status <= 0:
        raise FitError(f"{trace.span_id}: fit did not converge "
                       f"({result.message})")
    rms = float(np.sqrt(np.mean(result.fun ** 2)))
    if rms > config.reject_threshold_db:
        raise FitError(
            f"{trace.span_id}: residual rms {rms:.3f} dB above reject "
            f"threshold {config.reject_threshold_db} dB")
    return CharacterizationRecord(span_id=trace.span_id,
                                  fitted=make_span(result.x),
                                  residual_rms_db=rms, timestamp=timestamp)


@dataclass(frozen=True)
class VirtualTopology:
    """Node/line connectivity as reported by the controller layer."""

    nodes: tuple
    ols_endpoints: dict      # ols_id -> (node_a, node_b)
    span_counts: dict        # ols_id -> int


@dataclass(frozen=True)
class DeviceDescriptions:
    """Static datasheet knowledge: ROADMs, TRX inventory, amps, D, gamma."""

    plan: ChannelPlan
    roadms: dict                       # node_id -> RoadmSpec
    amp_devices: dict                  # ols_id -> tuple[AmpDevice]
    trxs: tuple = ()
    curves: dict = field(default_factory=dict)


def build_phy_topology(records, virtual_topology: VirtualTopology,
                       devices: DeviceDescriptions) -> PhyTopology:
    """Assemble the complete twin-ready topology from characterization records."""
    by_span = {r.span_id: r for r in records}
    olss = {}
    for ols_id, (node_a, node_b) in virtual_topology.ols_endpoints.items():
        for node in (node_a, node_b):
            if node not in virtual_topology.nodes:
                raise TopologyError(
                    f"OLS {ols_id}: dangling endpoint {node!r}")
        count = virtual_topology.span_counts[ols_id]
        spans = []
        for i in range(count):
            span_id = f"{ols_id}/{i + 1}"
            if span_id not in by_span:
                raise TopologyError(f"missing characterization record for "
                                    f"span {span_id}")
            spans.append(by_span[span_id].fitted)
        olss[ols_id] = OlsPhy(ols_id=ols_id, endpoint_a=node_a,
                              endpoint_b=node_b, spans=tuple(spans),
                              amps=devices.amp_devices[ols_id])
    topo = PhyTopology(plan=devices.plan, roadms=dict(devices.roadms),
                       olss=olss, trxs=tuple(devices.trxs),
                       curves=dict(devices.curves))
    return topo.validate()


# -- characterization database (append-only, one document per record) --------

SCHEMA = "characterization-record/v1"


def record_to_doc(record: CharacterizationRecord) -> dict:
    span = record.fitted
    return {
        "schema": SCHEMA,
        "span_id": record.span_id,
        "residual_rms_db": record.residual_rms_db,
        "timestamp": record.timestamp,
        "fitted": {
            "length_km": span.length_km,
            "raman_efficiency": span.raman_efficiency,
            "dispersion_ps_nm_km": span.dispersion_ps_nm_km,
            "loss_knot_freq_hz": list(span.loss.knot_freq_hz),
            "loss_knot_db_per_km": list(span.loss.knot_db_per_km),
            "input_loss_db": span.input_loss_db,
            "output_loss_db": span.output_loss_db,
            "lumped_losses": [list(e) for e in span.lumped_losses],
            "gamma": span.gamma,
        },
    }


def record_from_doc(doc: dict) -> CharacterizationRecord:
    if doc.get("schema") != SCHEMA:
        raise FitError(f"unknown record schema {doc.get('schema')!r}")
    f = doc["fitted"]
    span = FiberSpanParams(
        length_km=f["length_km"], raman_efficiency=f["raman_efficiency"],
        dispersion_ps_nm_km=f["dispersion_ps_nm_km"],
        loss=LossFunction.from_knots(f["loss_knot_freq_hz"],
                                     f["loss_knot_db_per_km"]),
        input_loss_db=f["input_loss_db"], output_loss_db=f["output_loss_db"],
        lumped_losses=tuple(tuple(e) for e in f["lumped_losses"]),
        gamma=f["gamma"])
    return CharacterizationRecord(span_id=doc["span_id"], fitted=span,
                                  residual_rms_db=doc["residual_rms_db"],
                                  timestamp=doc["timestamp"])


def append_records(path, records):
    with open(path, "a", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record_to_doc(record), sort_keys=True) + "\n")


def load_records(path) -> list:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(record_from_doc(json.loads(line)))
    return records
