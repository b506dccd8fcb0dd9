"""Emulated network elements and the ground-truth physics behind them.

Agents own their state and mutate it only through messages; every read goes
through a poll.  The :class:`GroundTruth` holds the scenario's real span
parameters and the currently configured device settings, and answers the
physics questions (OCM spectra, path GSNR, line powers) that telemetry
reports are derived from.
"""

import zlib
from dataclasses import replace

import numpy as np

from ..edfa import EdfaMode, EdfaOperatingPoint, edfa_apply
from ..errors import AgentError, DeviceLimitError
from ..fiber import span_transfer
from ..line import OlsDescriptor, gsnr_db, propagate_ols
from ..spectrum import PowerSpectrum
from ..transceiver import FORMATS_BY_NAME
from ..units import db_to_lin, dbm_to_w, w_to_dbm


def op_point_to_doc(op: EdfaOperatingPoint) -> dict:
    return {"mode": op.mode.value, "gain_db": op.gain_db,
            "tilt_db": op.tilt_db, "p_out_dbm": op.p_out_dbm,
            "nf_db": op.nf_db, "g_min_db": op.g_min_db,
            "g_max_db": op.g_max_db, "p_out_max_dbm": op.p_out_max_dbm}


def op_point_from_doc(doc: dict) -> EdfaOperatingPoint:
    return EdfaOperatingPoint(
        mode=EdfaMode(doc["mode"]), gain_db=doc["gain_db"],
        tilt_db=doc["tilt_db"], p_out_dbm=doc["p_out_dbm"],
        nf_db=doc["nf_db"], g_min_db=doc["g_min_db"],
        g_max_db=doc["g_max_db"], p_out_max_dbm=doc["p_out_max_dbm"])


class GroundTruth:
    """The physical reality the agents report on."""

    def __init__(self, scenario):
        self.scenario = scenario
        self.plan = scenario.plan
        self.op_points = {ols: [None] * (len(spans) + 1)
                          for ols, spans in scenario.ols_spans.items()}
        self.probe_mode = {ols: None for ols in scenario.ols_spans}
        self.link_up = {ols: True for ols in scenario.ols_spans}
        self.version = 0
        self._gsnr_cache = {}

    def _bump(self):
        self.version += 1
        self._gsnr_cache.clear()

    def amp_device(self, ols_id, index):
        return self.scenario.ols_amps[ols_id][index]

    def set_amp(self, ols_id, index, op: EdfaOperatingPoint):
        dev = self.amp_device(ols_id, index)
        if op.mode is EdfaMode.CONSTANT_GAIN and not \
                dev.g_min_db <= op.gain_db <= dev.g_max_db:
            raise DeviceLimitError(
                f"{ols_id} {dev.label}: gain {op.gain_db:.2f} dB outside "
                f"[{dev.g_min_db}, {dev.g_max_db}] dB")
        if op.p_out_dbm > dev.p_out_max_dbm:
            raise DeviceLimitError(
                f"{ols_id} {dev.label}: output {op.p_out_dbm:.2f} dBm above "
                f"maximum {dev.p_out_max_dbm:.2f} dBm")
        # the device enforces its own datasheet limits regardless of the
        # requested operating point's embedded bounds
        bounded = replace(op, nf_db=dev.nf_db, g_min_db=dev.g_min_db,
                          g_max_db=dev.g_max_db,
                          p_out_max_dbm=dev.p_out_max_dbm)
        self.op_points[ols_id][index] = bounded
        self._bump()

    def set_probe(self, ols_id, span_index, level_dbm):
        if not 0 <= span_index < len(self.scenario.ols_spans[ols_id]):
            raise AgentError(f"{ols_id}: no span {span_index}")
        max_power = min(a.p_out_max_dbm
                        for a in self.scenario.ols_amps[ols_id])
        if level_dbm > max_power:
            raise DeviceLimitError(
                f"{ols_id}: probe level {level_dbm:.1f} dBm above amplifier "
                f"maximum {max_power:.1f} dBm")
        self.probe_mode[ols_id] = (span_index, float(level_dbm))
        self._bump()

    def restore_idle(self, ols_id):
        self.probe_mode[ols_id] = None
        self._bump()

    def cut_link(self, ols_id):
        if not self.link_up[ols_id]:
            raise AgentError(f"link {ols_id} is already cut")
        self.link_up[ols_id] = False
        self._bump()

    def line_configured(self, ols_id) -> bool:
        return all(op is not None for op in self.op_points[ols_id])

    def descriptor(self, ols_id) -> OlsDescriptor:
        if not self.line_configured(ols_id):
            raise AgentError(f"{ols_id}: amplifiers not configured")
        ops = self.op_points[ols_id]
        a, b = self.scenario.ols_endpoints[ols_id]
        return OlsDescriptor(ols_id, booster=ops[0],
                             spans=self.scenario.ols_spans[ols_id],
                             ilas=tuple(ops[1:-1]), preamp=ops[-1],
                             endpoint_a=a, endpoint_b=b)

    def span_ocm_pair(self, ols_id, span_index, level_dbm):
        """True flat ASE-probe spectra at both terminals of one span, watt."""
        span = self.scenario.ols_spans[ols_id][span_index]
        comb = np.full(self.plan.channel_count,
                       dbm_to_w(level_dbm) / self.plan.channel_count)
        zeros = np.zeros(self.plan.channel_count)
        out = span_transfer(PowerSpectrum(self.plan, comb, zeros, zeros), span)
        return comb, out.signal_w

    def otdr_events(self, ols_id, span_index):
        span = self.scenario.ols_spans[ols_id][span_index]
        events = [(0.05, span.input_loss_db)]
        events += [(z, l) for z, l in span.lumped_losses]
        events.append((span.length_km - 0.05, span.output_loss_db))
        return span.length_km, events

    def path_gsnr(self, node_seq, ols_seq) -> np.ndarray:
        """Truth per-channel GSNR across a path at current settings."""
        key = (tuple(ols_seq), self.version)
        if key in self._gsnr_cache:
            return self._gsnr_cache[key]
        for ols_id in ols_seq:
            if not self.link_up[ols_id]:
                raise AgentError(f"link {ols_id} is down")
        src = node_seq[0]
        launch = self.scenario.tx_power_dbm \
            - self.scenario.roadms[src].add_loss_db
        spectrum = PowerSpectrum.flat(self.plan, launch)
        for hop, ols_id in enumerate(ols_seq):
            if hop > 0:
                express = self.scenario.roadms[node_seq[hop]].express_loss_db
                spectrum = spectrum.scaled(db_to_lin(-express))
            spectrum = propagate_ols(spectrum, self.descriptor(ols_id))
        result = gsnr_db(spectrum)
        self._gsnr_cache[key] = result
        return result

    def amp_output_powers_dbm(self, ols_id):
        """Total optical output power at each amplifier of a line."""
        a, _ = self.scenario.ols_endpoints[ols_id]
        launch = self.scenario.tx_power_dbm \
            - self.scenario.roadms[a].add_loss_db
        spectrum = PowerSpectrum.flat(self.plan, launch)
        descriptor = self.descriptor(ols_id)
        powers = []
        bw = self.plan.symbol_rate_baud
        amps = (descriptor.booster,) + descriptor.ilas + (descriptor.preamp,)
        for i, amp in enumerate(amps):
            spectrum = edfa_apply(spectrum, amp, bw)
            powers.append(float(w_to_dbm(spectrum.total_power_w())))
            if i < len(descriptor.spans):
                spectrum = span_transfer(spectrum, descriptor.spans[i])
        return powers


def _stable_key(*parts) -> list:
    return [zlib.crc32(str(p).encode()) for p in parts]


class NeAgent:
    kind = "NE"

    def __init__(self, agent_id, truth: GroundTruth, scenario, seed_key):
        self.agent_id = agent_id
        self.truth = truth
        self.scenario = scenario
        self._seed_key = seed_key

    def _rng(self, *tag):
        return np.random.default_rng(
            [self.scenario.seed] + _stable_key(self.agent_id, *tag))

    def handle(self, doc: dict) -> dict:
        verb = doc.get("verb")
        op = doc.get("op", "")
        method = getattr(self, f"on_{verb}_{op}" if op else f"on_{verb}", None)
        if method is None:
            return {"verb": "error", "kind": "agent",
                    "message": f"{self.agent_id}: unsupported "
                               f"{verb}/{op or '-'} for {self.kind}"}
        try:
            result = method(doc)
        except DeviceLimitError as exc:
            return {"verb": "error", "kind": "device_limit",
                    "message": str(exc)}
        except AgentError as exc:
            return {"verb": "error", "kind": "agent", "message": str(exc)}
        out = {"verb": "ack"}
        out.update(result or {})
        return out


class RoadmAgent(NeAgent):
    kind = "ROADM"

    def __init__(self, agent_id, node_id, truth, scenario, seed_key):
        super().__init__(agent_id, truth, scenario, seed_key)
        self.node_id = node_id
        self.cross_connects = []   # {channel, source, sink}

    def _conflicts(self, channel, endpoint):
        for xc in self.cross_connects:
            if xc["channel"] == channel and endpoint in (xc["source"],
                                                         xc["sink"]):
                return xc
        return None

    def on_configure_add_xc(self, doc):
        channel = int(doc["channel"])
        source, sink = doc["source"], doc["sink"]
        for endpoint in (source, sink):
            clash = self._conflicts(channel, endpoint)
            if clash:
                raise AgentError(
                    f"{self.agent_id}: channel {channel} already connected "
                    f"at {endpoint} ({clash['source']} -> {clash['sink']})")
        self.cross_connects.append({"channel": channel, "source": source,
                                    "sink": sink})
        return {}

    def on_configure_remove_xc(self, doc):
        target = {"channel": int(doc["channel"]), "source": doc["source"],
                  "sink": doc["sink"]}
        if target not in self.cross_connects:
            raise AgentError(f"{self.agent_id}: no such cross-connect")
        self.cross_connects.remove(target)
        return {}

    def on_poll_xc_list(self, doc):
        return {"cross_connects": list(self.cross_connects)}


class TrxAgent(NeAgent):
    kind = "TRX"

    def __init__(self, agent_id, spec, truth, scenario, seed_key, tracer):
        super().__init__(agent_id, truth, scenario, seed_key)
        self.spec = spec
        self.format_name = None
        self.enabled = False
        self._trace_path = tracer   # resolves the wired path of this TRX

    def on_configure_set(self, doc):
        fmt = doc.get("format")
        if fmt is not None and fmt not in FORMATS_BY_NAME:
            raise AgentError(f"{self.agent_id}: unsupported format {fmt!r}")
        freq = doc.get("frequency_hz")
        if freq is not None and abs(freq - self.spec.frequency_hz) > 1.0:
            raise AgentError(
                f"{self.agent_id}: fixed-frequency pluggable at "
                f"{self.spec.frequency_hz / 1e12:.2f} THz cannot tune")
        self.format_name = fmt
        self.enabled = bool(doc.get("enable", False))
        return {}

    def on_poll_ber(self, doc):
        if not self.enabled or self.format_name is None:
            raise AgentError(f"{self.agent_id}: no active lightpath")
        node_seq, ols_seq, channel = self._trace_path(self)
        window = int(doc["now_s"] // self.scenario.latencies.ber_window_s)
        if any(not self.truth.link_up[o] for o in ols_seq):
            return {"ber": 0.5, "los": True, "window": window}
        gsnr = float(self.truth.path_gsnr(node_seq, ols_seq)[channel])
        jitter = 0.0
        if self.scenario.noise.ber_jitter_db > 0:
            rng = self._rng("ber", window)
            jitter = float(rng.normal(0.0, self.scenario.noise.ber_jitter_db))
        curve = self.scenario.curves[self.spec.trx_type]
        fmt = FORMATS_BY_NAME[self.format_name]
        return {"ber": curve.ber_at(gsnr + jitter, fmt), "los": False,
                "window": window, "gsnr_true_db": gsnr}


class OlcAgent(NeAgent):
    kind = "OLC"

    def __init__(self, agent_id, ols_id, truth, scenario, seed_key):
        super().__init__(agent_id, truth, scenario, seed_key)
        self.ols_id = ols_id
        self.ready = False
        self._ocm_polls = 0
        self._otdr_polls = 0

    def on_configure_set_amp(self, doc):
        op = op_point_from_doc(doc["op_point"])
        self.truth.set_amp(self.ols_id, int(doc["amp_index"]), op)
        self.ready = False
        return {"applied": op_point_to_doc(
            self.truth.op_points[self.ols_id][int(doc["amp_index"])])}

    def on_configure_probe(self, doc):
        self.truth.set_probe(self.ols_id, int(doc["span_index"]),
                             float(doc["level_dbm"]))
        self.ready = False
        return {}

    def on_configure_restore_idle(self, doc):
        self.truth.restore_idle(self.ols_id)
        return {}

    def on_configure_mark_ready(self, doc):
        if not self.truth.line_configured(self.ols_id):
            raise AgentError(f"{self.ols_id}: amplifiers not all configured")
        self.ready = True
        return {}

    def _noisy_dbm(self, values_w, tag):
        dbm = w_to_dbm(np.asarray(values_w))
        sigma = self.scenario.noise.ocm_sigma_db
        if sigma > 0:
            rng = self._rng("ocm", tag)
            dbm = dbm + rng.normal(0.0, sigma, dbm.shape)
        return [float(x) for x in dbm]

    def on_poll_ocm(self, doc):
        probe = self.truth.probe_mode[self.ols_id]
        if probe is None:
            raise AgentError(f"{self.ols_id}: no probe configured")
        span_index, level = probe
        if int(doc["span_index"]) != span_index:
            raise AgentError(f"{self.ols_id}: probe is on span {span_index}")
        in_w, out_w = self.truth.span_ocm_pair(self.ols_id, span_index, level)
        self._ocm_polls += 1
        return {"input_dbm": self._noisy_dbm(in_w, ("in", self._ocm_polls)),
                "output_dbm": self._noisy_dbm(out_w, ("out", self._ocm_polls))}

    def on_poll_otdr(self, doc):
        length, events = self.truth.otdr_events(self.ols_id,
                                                int(doc["span_index"]))
        sigma = self.scenario.noise.otdr_sigma_db
        self._otdr_polls += 1
        if sigma > 0:
            rng = self._rng("otdr", self._otdr_polls)
            events = [(z, max(loss + float(rng.normal(0.0, sigma)), 0.0))
                      for z, loss in events]
        return {"measured_length_km": length,
                "events": [[z, l] for z, l in events],
                "noise_sigma_db": sigma}

    def on_poll_total_power(self, doc):
        powers = self.truth.amp_output_powers_dbm(self.ols_id)
        index = int(doc["amp_index"])
        if not 0 <= index < len(powers):
            raise AgentError(f"{self.ols_id}: no amplifier {index}")
        value = powers[index]
        sigma = self.scenario.noise.ocm_sigma_db
        if sigma > 0:
            rng = self._rng("power", index)
            value += float(rng.normal(0.0, sigma))
        return {"total_power_dbm": value}

    def on_poll_line_status(self, doc):
        return {"up": self.truth.link_up[self.ols_id], "ready": self.ready}
