"""The emulated data plane: agents, wiring, telemetry, failure injection.

:class:`EmulatedNetwork` builds one ROADM agent per node, one transceiver
agent per pluggable and one line controller agent per OLS, connects them
through the selected transport, owns the discrete-event clock and the event
log, and exposes the two controller-facing facades:

- :class:`NosHandle` -- node-side view (topology, occupancy, TRX/ROADM
  configuration, failure interception), and
- :class:`OlcHandle` -- per-line view (probing, amplifier working points).
"""

import hashlib
import json

import numpy as np

from ..characterization import OtdrTrace
from ..errors import AgentError, DeviceLimitError
from .agents import (GroundTruth, OlcAgent, RoadmAgent, TrxAgent,
                     op_point_to_doc)
from .scheduler import Scheduler
from .transport import make_transport


def payload_digest(payload) -> str:
    blob = json.dumps(payload, sort_keys=True, default=str).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:12]


class EmulatedNetwork:
    def __init__(self, scenario, transport: str = "inproc"):
        self.scenario = scenario
        self.truth = GroundTruth(scenario)
        self.scheduler = Scheduler()
        self.events = []
        self.down_agents = set()
        self.interrupts_enabled = True
        self.telemetry_detection_enabled = True
        self._pending_interrupts = []
        self._reported_failures = set()

        self.agents = {}
        self.transports = {}
        for node_id in sorted(scenario.roadms):
            agent = RoadmAgent(f"roadm:{node_id}", node_id, self.truth,
                               scenario, seed_key=node_id)
            self._register(agent, transport)
        for spec in sorted(scenario.trxs, key=lambda t: t.trx_id):
            agent = TrxAgent(f"trx:{spec.trx_id}", spec, self.truth, scenario,
                             seed_key=spec.trx_id, tracer=self._trace_path)
            self._register(agent, transport)
        for ols_id in sorted(scenario.ols_endpoints):
            agent = OlcAgent(f"olc:{ols_id}", ols_id, self.truth, scenario,
                             seed_key=ols_id)
            self._register(agent, transport)

    def _register(self, agent, transport):
        self.agents[agent.agent_id] = agent
        self.transports[agent.agent_id] = make_transport(transport,
                                                         agent.handle)

    def close(self):
        for t in self.transports.values():
            t.close()

    # -- messaging ------------------------------------------------------------

    def log_event(self, actor: str, verb: str, payload=None):
        self.events.append({"t": round(self.scheduler.now, 6), "actor": actor,
                            "verb": verb,
                            "digest": payload_digest(payload or {})})

    def dump_event_log(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            for entry in self.events:
                fh.write(json.dumps(entry, sort_keys=True) + "\n")

    def call(self, agent_id: str, verb: str, op: str = "", **payload) -> dict:
        lat = self.scenario.latencies
        if agent_id not in self.agents:
            raise AgentError(f"unknown agent {agent_id!r}")
        if agent_id in self.down_agents:
            self.scheduler.advance(lat.scaled("polling_interval_s"))
            raise AgentError(f"{agent_id} unreachable (timeout)")
        doc = {"verb": verb, **payload}
        if op:
            doc["op"] = op
        self.scheduler.advance(lat.scaled("message_s"))
        if verb == "configure":
            self.scheduler.advance(lat.scaled("device_config_s"))
        response = self.transports[agent_id].request(doc)
        self.scheduler.advance(lat.scaled("message_s"))
        self.log_event(agent_id, f"{verb}:{op}" if op else verb, payload)
        if response.get("verb") == "error":
            kind = response.get("kind")
            message = response.get("message", "agent error")
            if kind == "device_limit":
                raise DeviceLimitError(message)
            raise AgentError(message)
        return response

    # -- wiring trace (truth side) ---------------------------------------------

    def _other_end(self, ols_id, node_id):
        a, b = self.scenario.ols_endpoints[ols_id]
        return b if node_id == a else a

    def _trace_path(self, trx_agent):
        """(node_seq, ols_seq, channel) for the lightpath wired to a TRX."""
        spec = trx_agent.spec
        channel = self.scenario.plan.index_of(spec.frequency_hz)
        endpoint = f"trx:{spec.trx_id}"
        roadm = self.agents[f"roadm:{spec.node_id}"]

        forward = None
        for xc in roadm.cross_connects:
            if xc["channel"] == channel and xc["source"] == endpoint:
                forward, key_out, key_in = xc, "sink", "source"
                break
            if xc["channel"] == channel and xc["sink"] == endpoint:
                forward, key_out, key_in = xc, "source", "sink"
                break
        if forward is None:
            raise AgentError(f"{spec.trx_id}: not wired to any line")

        node_seq = [spec.node_id]
        ols_seq = []
        current = forward[key_out]
        node = spec.node_id
        for _ in range(len(self.scenario.ols_endpoints) + 1):
            if not current.startswith("line:"):
                raise AgentError(f"{spec.trx_id}: broken cross-connect chain")
            ols_id = current[5:]
            ols_seq.append(ols_id)
            node = self._other_end(ols_id, node)
            node_seq.append(node)
            far = self.agents[f"roadm:{node}"]
            nxt = None
            for xc in far.cross_connects:
                if xc["channel"] == channel and xc[key_in] == current:
                    nxt = xc[key_out]
                    break
            if nxt is None:
                raise AgentError(f"{spec.trx_id}: path ends unterminated "
                                 f"at {node}")
            if nxt.startswith("trx:"):
                return tuple(node_seq), tuple(ols_seq), channel
            current = nxt
        raise AgentError(f"{spec.trx_id}: cross-connect loop detected")

    # -- failure machinery -----------------------------------------------------

    def inject_failure(self, ols_id: str):
        """Cut a fiber; the OLC interrupt and TRX loss of signal follow."""
        if ols_id not in self.scenario.ols_endpoints:
            raise AgentError(f"unknown link {ols_id!r}")
        self.truth.cut_link(ols_id)   # rejects an already-cut link
        self.log_event("phy", "fiber_cut", {"link": ols_id})
        if self.interrupts_enabled:
            lat = self.scenario.latencies

            def deliver():
                self._pending_interrupts.append(ols_id)
                self.log_event(f"olc:{ols_id}", "interrupt", {"link": ols_id})

            self.scheduler.after(lat.scaled("message_s"), deliver)


class NosHandle:
    """Node-side operating-system facade over the emulated agents."""

    def __init__(self, network: EmulatedNetwork):
        self.network = network
        self.scenario = network.scenario

    # -- discovery / provisioning ----------------------------------------------

    def list_nodes(self) -> list:
        nodes = []
        for node_id in sorted(self.scenario.roadms):
            agent_id = f"roadm:{node_id}"
            self.network.call(agent_id, "poll", "xc_list")
            nodes.append(node_id)
        return nodes

    def links(self) -> dict:
        return dict(self.scenario.ols_endpoints)

    def trx_inventory(self) -> dict:
        plan = self.scenario.plan
        return {t.trx_id: {"node": t.node_id,
                           "channel": plan.index_of(t.frequency_hz),
                           "type": t.trx_type}
                for t in self.scenario.trxs}

    def occupancy(self, ols_id) -> set:
        """Channels currently occupied on a link, loaders included."""
        plan = self.scenario.plan
        occupied = set(self.scenario.initial_occupancy.get(ols_id, []))
        if self.scenario.occupy_non_trx_channels:
            trx_channels = self.scenario.trx_channels()
            occupied |= {c for c in range(plan.channel_count)
                         if c not in trx_channels}
        line = f"line:{ols_id}"
        for node_id in self.scenario.ols_endpoints[ols_id]:
            response = self.network.call(f"roadm:{node_id}", "poll", "xc_list")
            for xc in response["cross_connects"]:
                if line in (xc["source"], xc["sink"]):
                    occupied.add(xc["channel"])
        return occupied

    # -- device configuration ---------------------------------------------------

    def configure_trx(self, trx_id, format_name, enable: bool):
        return self.network.call(f"trx:{trx_id}", "configure", "set",
                                 format=format_name,
                                 frequency_hz=self._trx_freq(trx_id),
                                 enable=enable)

    def _trx_freq(self, trx_id):
        for t in self.scenario.trxs:
            if t.trx_id == trx_id:
                return t.frequency_hz
        raise AgentError(f"unknown TRX {trx_id!r}")

    def add_xc(self, node_id, channel, source, sink):
        return self.network.call(f"roadm:{node_id}", "configure", "add_xc",
                                 channel=channel, source=source, sink=sink)

    def remove_xc(self, node_id, channel, source, sink):
        return self.network.call(f"roadm:{node_id}", "configure", "remove_xc",
                                 channel=channel, source=source, sink=sink)

    def poll_ber(self, trx_id) -> dict:
        return self.network.call(f"trx:{trx_id}", "poll", "ber",
                                 now_s=self.network.scheduler.now)

    # -- failure interception ----------------------------------------------------

    def detect_failures(self) -> list:
        """One polling cycle: new link-failure events, deduplicated.

        A failure surfaces through the line-controller interrupt and through
        node-side telemetry; either path alone still produces exactly one
        event per failed link.
        """
        network = self.network
        lat = self.scenario.latencies
        network.scheduler.advance(lat.scaled("polling_interval_s"))
        found = []
        if network.interrupts_enabled:
            found.extend(network._pending_interrupts)
            network._pending_interrupts.clear()
        if network.telemetry_detection_enabled:
            for ols_id in sorted(self.scenario.ols_endpoints):
                status = network.call(f"olc:{ols_id}", "poll", "line_status")
                if not status["up"]:
                    found.append(ols_id)
        fresh = []
        for ols_id in found:
            if ols_id not in network._reported_failures:
                network._reported_failures.add(ols_id)
                fresh.append(ols_id)
                network.log_event("nos", "failure", {"link": ols_id})
        return fresh


class OlcHandle:
    """Per-OLS controller handle used by probing and working-point setting."""

    def __init__(self, network: EmulatedNetwork, ols_id: str):
        self.network = network
        self.ols_id = ols_id
        self.scenario = network.scenario
        self._agent = f"olc:{ols_id}"

    def span_count(self) -> int:
        return len(self.scenario.ols_spans[self.ols_id])

    def max_probe_power_dbm(self) -> float:
        return min(a.p_out_max_dbm for a in self.scenario.ols_amps[self.ols_id])

    def probe_offsets_db(self):
        return self.scenario.probe_offsets_db

    def amp_label(self, index: int) -> str:
        return self.scenario.ols_amps[self.ols_id][index].label

    def otdr_trace(self, span_index: int) -> OtdrTrace:
        response = self.network.call(self._agent, "poll", "otdr",
                                     span_index=span_index)
        return OtdrTrace(span_id=f"{self.ols_id}/{span_index + 1}",
                         measured_length_km=response["measured_length_km"],
                         events=tuple((z, l) for z, l in response["events"]),
                         noise_sigma_db=response["noise_sigma_db"])

    def probe_span(self, span_index: int, level_dbm: float):
        self.network.call(self._agent, "configure", "probe",
                          span_index=span_index, level_dbm=level_dbm)
        response = self.network.call(self._agent, "poll", "ocm",
                                     span_index=span_index)
        return response["input_dbm"], response["output_dbm"]

    def restore_idle(self):
        try:
            self.network.call(self._agent, "configure", "restore_idle")
        except AgentError:
            pass   # an unreachable controller cannot be restored

    def configure_amp(self, index: int, op) -> str:
        response = self.network.call(self._agent, "configure", "set_amp",
                                     amp_index=index,
                                     op_point=op_point_to_doc(op))
        return "ok" if response.get("verb") == "ack" else "rejected"

    def mark_ready(self):
        self.network.call(self._agent, "configure", "mark_ready")

    def is_ready(self) -> bool:
        return self.network.call(self._agent, "poll", "line_status")["ready"]
