"""Network orchestrator: topology abstraction, RSA, deployment, recovery.

The controller is a single logical event processor: provisioning, traffic
requests and failure handling are serialized workflows.  It talks to the
node-side facade (``nos``) for device configuration and occupancy, and to
the twin topology for transmission feasibility (through the lightpath
computation engine).
"""

import itertools
import time
from dataclasses import dataclass, field

from .errors import (AgentError, DeviceLimitError, NotReadyError, PceError,
                     TopologyError)
from .lpce import compute_path_formats
from .topology import OlsState, PhyTopology
from .transceiver import DP_QPSK, FORMATS_BY_NAME

UP, FAILED = "UP", "FAILED"


class _NullClock:
    def __init__(self):
        self.now = 0.0

    def advance(self, seconds):
        self.now += max(seconds, 0.0)


@dataclass
class LinkState:
    link_id: str
    a: str
    b: str
    state: str = UP
    channel_owners: dict = field(default_factory=dict)   # channel -> owner

    def free(self, channel: int) -> bool:
        return self.state == UP and channel not in self.channel_owners


@dataclass
class TopologyAbstraction:
    plan: "ChannelPlan"
    nodes: dict            # node_id -> {"trxs": {trx_id: {...}}}
    links: dict            # link_id -> LinkState

    def slot_bitmap(self, link_id):
        """Spectrum occupancy per 12.5 GHz slot: True = occupied."""
        link = self.links[link_id]
        k = self.plan.slots_per_channel
        bitmap = [False] * self.plan.slot_count
        for channel in link.channel_owners:
            for slot in range(channel * k, (channel + 1) * k):
                bitmap[slot] = True
        return bitmap

    def to_doc(self) -> dict:
        return {
            "nodes": {n: {"trxs": dict(v["trxs"])}
                      for n, v in sorted(self.nodes.items())},
            "links": {l.link_id: {"a": l.a, "b": l.b, "state": l.state,
                                  "channel_owners": {str(c): o for c, o in
                                                     sorted(l.channel_owners.items())}}
                      for l in self.links.values()},
        }

    @classmethod
    def from_doc(cls, plan, doc) -> "TopologyAbstraction":
        links = {lid: LinkState(link_id=lid, a=l["a"], b=l["b"],
                                state=l["state"],
                                channel_owners={int(c): o for c, o in
                                                l["channel_owners"].items()})
                 for lid, l in doc["links"].items()}
        return cls(plan=plan, nodes={n: {"trxs": dict(v["trxs"])}
                                     for n, v in doc["nodes"].items()},
                   links=links)


@dataclass
class RoutingSpace:
    paths: dict        # (src, dst) -> tuple of (node_seq, link_seq)

    def candidate_paths(self, src, dst):
        return self.paths.get((src, dst), ())

    def summary(self, abstraction: TopologyAbstraction) -> dict:
        out = {}
        for (src, dst), paths in sorted(self.paths.items()):
            rows = []
            for node_seq, link_seq in paths:
                free = available_channels(abstraction, link_seq)
                rows.append({"links": list(link_seq),
                             "nodes": list(node_seq),
                             "free_channels": len(free)})
            out[f"{src}->{dst}"] = rows
        return out


def available_channels(abstraction: TopologyAbstraction, link_seq) -> set:
    """Wavelength-continuous free channels along a path."""
    channels = set(range(abstraction.plan.channel_count))
    for link_id in link_seq:
        link = abstraction.links[link_id]
        if link.state != UP:
            return set()
        channels &= {c for c in channels if link.free(c)}
    return channels


@dataclass
class TrafficRequest:
    request_id: str
    src: str
    dst: str
    rate_gbps: int
    state: str = "PENDING"          # PENDING/SATISFIED/PARTIAL/FAILED
    lightpath_ids: list = field(default_factory=list)
    shortfall_gbps: int = 0


@dataclass
class Lightpath:
    lp_id: str
    request_id: str
    node_seq: tuple
    links: tuple
    channel: int
    format_name: str
    trx_src: str
    trx_dst: str
    state: str = "PLANNED"          # PLANNED/ACTIVE/FAILED/RELEASED

    @property
    def rate_gbps(self) -> int:
        return FORMATS_BY_NAME[self.format_name].rate_gbps


@dataclass
class RecoveryReport:
    link_id: str
    stages_s: dict                 # the four pipeline stages, emulated time
    total_s: float                 # sum of the stages
    lost_gbps: int
    restored_gbps: int
    request_outcomes: dict         # request_id -> state after recovery
    new_lightpath_ids: list
    wall_seconds: float = 0.0      # measured, not part of persisted reports

    def to_doc(self) -> dict:
        return {"link_id": self.link_id,
                "stages_s": {k: round(v, 6) for k, v in self.stages_s.items()},
                "total_s": round(self.total_s, 6),
                "lost_gbps": self.lost_gbps,
                "restored_gbps": self.restored_gbps,
                "request_outcomes": dict(sorted(self.request_outcomes.items())),
                "new_lightpath_ids": list(self.new_lightpath_ids)}


STAGE_NAMES = ("topology_update", "lost_traffic_estimation", "lpce",
               "establishment")


class Oonc:
    """Open optical network controller over an emulated data plane."""

    def __init__(self, nos, twin_topology: PhyTopology, clock=None,
                 log=None, design_margin_db=0.0, tx_power_dbm=0.0,
                 lpce_eval_cost_s=0.0, min_stage_cost_s=0.001):
        self.nos = nos
        self.twin = twin_topology
        self.clock = clock if clock is not None else _NullClock()
        self._log = log if log is not None else (lambda *a, **k: None)
        self.design_margin_db = design_margin_db
        self.tx_power_dbm = tx_power_dbm
        self.lpce_eval_cost_s = lpce_eval_cost_s
        self.min_stage_cost_s = min_stage_cost_s

        self.abstraction = None
        self.routing = None
        self.requests = {}
        self.lightpaths = {}
        self.trx_in_use = set()
        self._trx_by_slot = {}      # (node, channel) -> trx_id
        self._counter = itertools.count(1)

    @property
    def provisioned(self) -> bool:
        return self.abstraction is not None

    # -- provisioning -----------------------------------------------------------

    def provision_network(self):
        """Build the topology abstraction and routing space from the nodes."""
        nodes = self.nos.list_nodes()    # raises atomically when a node is down
        inventory = self.nos.trx_inventory()
        node_docs = {n: {"trxs": {}} for n in nodes}
        self._trx_by_slot = {}
        for trx_id, info in sorted(inventory.items()):
            node_docs[info["node"]]["trxs"][trx_id] = dict(info)
            self._trx_by_slot[(info["node"], info["channel"])] = trx_id

        links = {}
        for link_id, (a, b) in sorted(self.nos.links().items()):
            owners = {c: "loader" for c in self.nos.occupancy(link_id)}
            links[link_id] = LinkState(link_id=link_id, a=a, b=b,
                                       channel_owners=owners)
            if link_id not in self.twin.olss:
                raise TopologyError(
                    f"link {link_id} reported by the nodes is unknown to "
                    "the twin")
        self.abstraction = TopologyAbstraction(plan=self.twin.plan,
                                               nodes=node_docs, links=links)
        self.routing = RoutingSpace(paths=self._all_paths(links, nodes))
        self._log("oonc", "provision",
                  {"nodes": nodes, "links": sorted(links)})
        return self.abstraction, self.routing

    def _all_paths(self, links, nodes, max_paths=16):
        adjacency = {}
        for link in links.values():
            adjacency.setdefault(link.a, []).append((link.b, link.link_id))
            adjacency.setdefault(link.b, []).append((link.a, link.link_id))
        paths = {}
        for src in nodes:
            for dst in nodes:
                if src == dst:
                    continue
                found = []

                def walk(node, visited, link_seq):
                    if node == dst:
                        found.append((tuple(visited), tuple(link_seq)))
                        return
                    for neighbor, link_id in sorted(adjacency.get(node, [])):
                        if neighbor in visited:
                            continue
                        walk(neighbor, visited + [neighbor],
                             link_seq + [link_id])

                walk(src, [src], [])
                found.sort(key=lambda p: (len(p[1]), "+".join(p[1])))
                paths[(src, dst)] = tuple(found[:max_paths])
        return paths

    # -- helpers ------------------------------------------------------------------

    def _require_provisioned(self):
        if not self.provisioned:
            raise NotReadyError("network not provisioned yet")

    def _free_trx(self, node, channel):
        trx_id = self._trx_by_slot.get((node, channel))
        if trx_id is None or trx_id in self.trx_in_use:
            return None
        return trx_id

    def _format_maps(self, src, dst):
        maps = compute_path_formats(src, dst, self.twin,
                                    design_margin_db=self.design_margin_db,
                                    tx_power_dbm=self.tx_power_dbm)
        evaluations = sum(len(m.entries) for m in maps)
        self.clock.advance(max(evaluations * self.lpce_eval_cost_s,
                               self.min_stage_cost_s))
        self._log("plase", "lpce", {"src": src, "dst": dst,
                                    "paths": [m.path_id for m in maps]})
        return maps

    # -- RSA ------------------------------------------------------------------------

    def rsa(self, request: TrafficRequest, format_maps, routing_space=None,
            need_gbps=None) -> list:
        """Plan the minimal lightpath set covering the requested rate.

        Candidates are graded highest cardinality first, then shortest path,
        then lowest channel (first fit).  Distinct lightpaths always use
        distinct channels (one transceiver pair per frequency), so greedy
        picking attains the minimal count.  A one-unit remainder takes the
        lower format even on a higher-capable channel.
        """
        self._require_provisioned()
        routing = routing_space or self.routing
        need_units = (need_gbps if need_gbps is not None
                      else request.rate_gbps) // 100
        by_path = {m.ols_sequence: m for m in format_maps}

        candidates = []      # (cardinality, path_rank, channel, path, fmt)
        for rank, (node_seq, link_seq) in enumerate(
                routing.candidate_paths(request.src, request.dst)):
            path_map = by_path.get(tuple(link_seq))
            if path_map is None:
                continue
            free = available_channels(self.abstraction, link_seq)
            for channel in sorted(free):
                entry = path_map.entries[channel]
                if entry.max_format is None:
                    continue
                if self._free_trx(request.src, channel) is None:
                    continue
                if self._free_trx(request.dst, channel) is None:
                    continue
                candidates.append((entry.max_format.cardinality, rank,
                                   channel, node_seq, link_seq, entry))
        candidates.sort(key=lambda c: (-c[0], c[1], c[2]))

        planned = []
        used_channels = set()
        remaining = need_units
        for cardinality, rank, channel, node_seq, link_seq, entry in candidates:
            if remaining <= 0:
                break
            if channel in used_channels:
                continue
            fmt = entry.max_format
            if remaining == 1 and fmt.rate_gbps > 100 and \
                    entry.margins_db[DP_QPSK.name] >= 0:
                fmt = DP_QPSK
            lp = Lightpath(
                lp_id=f"LP{next(self._counter)}",
                request_id=request.request_id,
                node_seq=tuple(node_seq), links=tuple(link_seq),
                channel=channel, format_name=fmt.name,
                trx_src=self._free_trx(request.src, channel),
                trx_dst=self._free_trx(request.dst, channel))
            planned.append(lp)
            used_channels.add(channel)
            remaining -= fmt.rate_gbps // 100
        self._log("oonc", "rsa", {
            "request": request.request_id,
            "planned": [[lp.lp_id, lp.format_name, lp.channel,
                         list(lp.links)] for lp in planned],
            "shortfall_gbps": max(remaining, 0) * 100})
        return planned

    # -- deployment --------------------------------------------------------------

    def _configure_lightpath(self, lp: Lightpath):
        configured = []
        try:
            self.nos.configure_trx(lp.trx_src, lp.format_name, enable=True)
            configured.append(("trx", lp.trx_src))
            self.nos.configure_trx(lp.trx_dst, lp.format_name, enable=True)
            configured.append(("trx", lp.trx_dst))
            hops = [(lp.node_seq[0], f"trx:{lp.trx_src}",
                     f"line:{lp.links[0]}")]
            for i in range(1, len(lp.links)):
                hops.append((lp.node_seq[i], f"line:{lp.links[i - 1]}",
                             f"line:{lp.links[i]}"))
            hops.append((lp.node_seq[-1], f"line:{lp.links[-1]}",
                         f"trx:{lp.trx_dst}"))
            for node, source, sink in hops:
                self.nos.add_xc(node, lp.channel, source, sink)
                configured.append(("xc", node, source, sink))
        except (AgentError, DeviceLimitError):
            for item in reversed(configured):
                try:
                    if item[0] == "trx":
                        self.nos.configure_trx(item[1], None, enable=False)
                    else:
                        self.nos.remove_xc(item[1], lp.channel, item[2],
                                           item[3])
                except (AgentError, DeviceLimitError):
                    pass
            raise

    def _teardown_lightpath(self, lp: Lightpath):
        for trx in (lp.trx_src, lp.trx_dst):
            try:
                self.nos.configure_trx(trx, None, enable=False)
            except (AgentError, DeviceLimitError):
                pass
        hops = [(lp.node_seq[0], f"trx:{lp.trx_src}", f"line:{lp.links[0]}")]
        for i in range(1, len(lp.links)):
            hops.append((lp.node_seq[i], f"line:{lp.links[i - 1]}",
                         f"line:{lp.links[i]}"))
        hops.append((lp.node_seq[-1], f"line:{lp.links[-1]}",
                     f"trx:{lp.trx_dst}"))
        for node, source, sink in hops:
            try:
                self.nos.remove_xc(node, lp.channel, source, sink)
            except (AgentError, DeviceLimitError):
                pass

    def _slots_free(self, lp: Lightpath) -> bool:
        return all(self.abstraction.links[l].free(lp.channel)
                   for l in lp.links)

    def deploy(self, lightpaths, replanned=False) -> dict:
        """Configure planned lightpaths; per-lightpath outcome, rollback on
        device failure, one re-plan on an occupancy conflict."""
        self._require_provisioned()
        outcomes = {}
        for lp in lightpaths:
            if any(self.abstraction.links[l].state != UP for l in lp.links):
                outcomes[lp.lp_id] = "rejected: link down"
                continue
            if not self._slots_free(lp) or lp.trx_src in self.trx_in_use \
                    or lp.trx_dst in self.trx_in_use:
                if replanned:
                    outcomes[lp.lp_id] = "rejected: occupancy conflict"
                    continue
                outcomes[lp.lp_id] = "replanned: occupancy conflict"
                request = self.requests[lp.request_id]
                maps = self._format_maps(request.src, request.dst)
                new_plan = self.rsa(request, maps,
                                    need_gbps=FORMATS_BY_NAME[
                                        lp.format_name].rate_gbps)
                sub = self.deploy(new_plan, replanned=True)
                outcomes.update(sub)
                continue
            try:
                self._configure_lightpath(lp)
            except (AgentError, DeviceLimitError) as exc:
                lp.state = "FAILED"
                outcomes[lp.lp_id] = f"failed: {exc}"
                continue
            for link_id in lp.links:
                self.abstraction.links[link_id].channel_owners[lp.channel] = \
                    lp.lp_id
            self.trx_in_use.update((lp.trx_src, lp.trx_dst))
            lp.state = "ACTIVE"
            self.lightpaths[lp.lp_id] = lp
            request = self.requests.get(lp.request_id)
            if request and lp.lp_id not in request.lightpath_ids:
                request.lightpath_ids.append(lp.lp_id)
            outcomes[lp.lp_id] = "established"
        self._log("oonc", "deploy", {"outcomes": outcomes})
        return outcomes

    # -- the two workflows ---------------------------------------------------------

    def delivered_gbps(self, request: TrafficRequest) -> int:
        return sum(self.lightpaths[lp_id].rate_gbps
                   for lp_id in request.lightpath_ids
                   if self.lightpaths[lp_id].state == "ACTIVE")

    def _settle_request(self, request: TrafficRequest, paths_exist=True):
        delivered = self.delivered_gbps(request)
        request.shortfall_gbps = max(request.rate_gbps - delivered, 0)
        if delivered >= request.rate_gbps:
            request.state = "SATISFIED"
        elif delivered > 0:
            request.state = "PARTIAL"
        else:
            # nothing delivered: capacity exhaustion is a (degenerate)
            # partial outcome, a missing path is a hard failure
            request.state = "PARTIAL" if paths_exist else "FAILED"

    def submit_request(self, src, dst, rate_gbps) -> TrafficRequest:
        self._require_provisioned()
        if rate_gbps <= 0 or rate_gbps % 100 != 0:
            raise PceError("rate must be a positive multiple of 100 Gb/s")
        request = TrafficRequest(request_id=f"R{next(self._counter)}",
                                 src=src, dst=dst, rate_gbps=int(rate_gbps))
        self.requests[request.request_id] = request
        self._log("oonc", "request", {"id": request.request_id, "src": src,
                                      "dst": dst, "rate_gbps": rate_gbps})
        try:
            maps = self._format_maps(src, dst)
        except (PceError, NotReadyError) as exc:
            request.state = "FAILED"
            request.shortfall_gbps = request.rate_gbps
            self._log("oonc", "rsa", {"request": request.request_id,
                                      "error": str(exc)})
            return request
        plan = self.rsa(request, maps)
        self.deploy(plan)
        self._settle_request(request)
        return request

    def handle_failure(self, link_id: str) -> RecoveryReport:
        """Best-effort recovery of the traffic lost to a hard link failure."""
        self._require_provisioned()
        if link_id not in self.abstraction.links:
            raise TopologyError(f"unknown link {link_id!r}")
        wall_start = time.perf_counter()
        link = self.abstraction.links[link_id]
        if link.state == FAILED:
            return RecoveryReport(
                link_id=link_id,
                stages_s={name: 0.0 for name in STAGE_NAMES}, total_s=0.0,
                lost_gbps=0, restored_gbps=0, request_outcomes={},
                new_lightpath_ids=[],
                wall_seconds=time.perf_counter() - wall_start)

        stages = {}
        # 1. topology update: mark the link, fail its lightpaths, clean up
        t0 = self.clock.now
        link.state = FAILED
        if link_id in self.twin.olss:
            self.twin.olss[link_id].state = OlsState.FAILED
        affected = [lp for lp in self.lightpaths.values()
                    if lp.state == "ACTIVE" and link_id in lp.links]
        for lp in affected:
            lp.state = "FAILED"
            for l in lp.links:
                owners = self.abstraction.links[l].channel_owners
                if owners.get(lp.channel) == lp.lp_id:
                    del owners[lp.channel]
            self.trx_in_use.discard(lp.trx_src)
            self.trx_in_use.discard(lp.trx_dst)
            self._teardown_lightpath(lp)
        self.clock.advance(self.min_stage_cost_s)
        self._log("oonc", "topology_update",
                  {"link": link_id, "failed_lightpaths":
                   sorted(lp.lp_id for lp in affected)})
        stages["topology_update"] = self.clock.now - t0

        # 2. lost traffic estimation
        t0 = self.clock.now
        lost_by_request = {}
        for lp in affected:
            lost_by_request.setdefault(lp.request_id, 0)
            lost_by_request[lp.request_id] += lp.rate_gbps
        lost_gbps = sum(lost_by_request.values())
        self.clock.advance(self.min_stage_cost_s)
        self._log("oonc", "lost_traffic_estimation",
                  {"lost_gbps": lost_gbps,
                   "requests": dict(sorted(lost_by_request.items()))})
        stages["lost_traffic_estimation"] = self.clock.now - t0

        # 3. fresh lightpath computation on the updated topology
        t0 = self.clock.now
        maps_by_pair = {}
        for request_id in sorted(lost_by_request):
            request = self.requests[request_id]
            pair = (request.src, request.dst)
            if pair not in maps_by_pair:
                try:
                    maps_by_pair[pair] = self._format_maps(*pair)
                except (PceError, NotReadyError):
                    maps_by_pair[pair] = []
        self.clock.advance(self.min_stage_cost_s)
        stages["lpce"] = self.clock.now - t0

        # 4. re-establishment, same endpoints, original requested rates
        t0 = self.clock.now
        outcomes = {}
        new_ids = []
        for request_id in sorted(lost_by_request):
            request = self.requests[request_id]
            maps = maps_by_pair[(request.src, request.dst)]
            need = request.rate_gbps - self.delivered_gbps(request)
            if maps and need > 0:
                plan = self.rsa(request, maps, need_gbps=need)
                self.deploy(plan)
                new_ids.extend(lp.lp_id for lp in plan
                               if lp.lp_id in self.lightpaths
                               and self.lightpaths[lp.lp_id].state == "ACTIVE")
            self._settle_request(request, paths_exist=bool(maps))
            outcomes[request_id] = request.state
        self.clock.advance(self.min_stage_cost_s)
        self._log("oonc", "establish", {"outcomes": outcomes,
                                        "new_lightpaths": new_ids})
        stages["establishment"] = self.clock.now - t0

        restored = sum(self.lightpaths[lp_id].rate_gbps for lp_id in new_ids)
        return RecoveryReport(
            link_id=link_id, stages_s=stages,
            total_s=sum(stages.values()), lost_gbps=lost_gbps,
            restored_gbps=restored, request_outcomes=outcomes,
            new_lightpath_ids=new_ids,
            wall_seconds=time.perf_counter() - wall_start)

    # -- consistency sweeps ----------------------------------------------------------

    def check_invariants(self):
        """No double booking, wavelength continuity, rate conservation."""
        for link in self.abstraction.links.values():
            for channel, owner in link.channel_owners.items():
                if owner == "loader":
                    continue
                lp = self.lightpaths.get(owner)
                assert lp is not None, f"{link.link_id}: stale owner {owner}"
                assert lp.state == "ACTIVE", \
                    f"{link.link_id}: non-active owner {owner}"
                assert lp.channel == channel and link.link_id in lp.links
            assert not (link.state == FAILED and any(
                o != "loader" for o in link.channel_owners.values())), \
                f"{link.link_id}: failed link still carries lightpaths"
        for lp in self.lightpaths.values():
            if lp.state != "ACTIVE":
                continue
            for l in lp.links:
                owner = self.abstraction.links[l].channel_owners.get(lp.channel)
                assert owner == lp.lp_id, \
                    f"{lp.lp_id}: slot on {l} owned by {owner}"
        for request in self.requests.values():
            delivered = self.delivered_gbps(request)
            assert request.rate_gbps <= delivered + request.shortfall_gbps, \
                f"{request.request_id}: conservation violated"
