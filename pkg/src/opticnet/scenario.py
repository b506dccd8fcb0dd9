"""Scenario files: the complete description of an emulated network study.

A scenario is a JSON document holding the channel plan, the nodes and line
systems with their ground-truth span parameters (used by the emulator) and
device limits, the transceiver inventory and curve configuration, noise
levels, emulated latencies, and a script of timed actions.  See
``docs/scenario_format.md`` for the schema.
"""

import json
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .ampopt import OptimizerConfig
from .characterization import DEFAULT_PROBE_OFFSETS_DB
from .errors import ScenarioError
from .fiber import FiberSpanParams, LossFunction
from .grid import ChannelPlan, build_channel_plan
from .topology import AmpDevice, OlsPhy, PhyTopology, RoadmSpec, TrxSpec
from .transceiver import analytic_curve, load_curve_table

SCHEMA = "scenario/v1"


@dataclass(frozen=True)
class NoiseConfig:
    ocm_sigma_db: float = 0.0
    otdr_sigma_db: float = 0.0
    ber_jitter_db: float = 0.1


@dataclass(frozen=True)
class LatencyConfig:
    """Emulated-time costs charged by the discrete-event data plane."""

    message_s: float = 0.001
    device_config_s: float = 0.1
    lpce_eval_s: float = 0.005     # per (path, channel) grading
    polling_interval_s: float = 1.0
    ber_window_s: float = 15.0
    time_scale: float = 1.0

    def scaled(self, name) -> float:
        return getattr(self, name) * self.time_scale


@dataclass(frozen=True)
class ScriptAction:
    time_s: float
    action: str                 # "request" | "fail_link"
    args: dict


@dataclass
class Scenario:
    name: str
    plan: ChannelPlan
    seed: int
    roadms: dict                  # node_id -> RoadmSpec
    trxs: tuple                   # TrxSpec
    curves: dict                  # trx_type -> TrxB2BCurve
    ols_endpoints: dict           # ols_id -> (a, b)
    ols_spans: dict               # ols_id -> tuple[FiberSpanParams]
    ols_amps: dict                # ols_id -> tuple[AmpDevice]
    noise: NoiseConfig
    latencies: LatencyConfig
    optimizer: OptimizerConfig
    probe_offsets_db: tuple
    tx_power_dbm: float
    design_margin_db: float
    occupy_non_trx_channels: bool
    initial_occupancy: dict       # ols_id -> [channel index]
    script: tuple                 # ScriptAction, times strictly increasing

    def ground_truth_topology(self) -> PhyTopology:
        """Twin-ready topology built from the ground truth (no working points)."""
        olss = {}
        for ols_id, (a, b) in self.ols_endpoints.items():
            olss[ols_id] = OlsPhy(ols_id=ols_id, endpoint_a=a, endpoint_b=b,
                                  spans=self.ols_spans[ols_id],
                                  amps=self.ols_amps[ols_id])
        topo = PhyTopology(plan=self.plan, roadms=dict(self.roadms),
                           olss=olss, trxs=self.trxs, curves=dict(self.curves))
        return topo.validate()

    def trx_channels(self) -> set:
        return {self.plan.index_of(t.frequency_hz) for t in self.trxs}


def _expect(doc, key, kind, path):
    if key not in doc:
        raise ScenarioError("missing required field", field=f"{path}.{key}")
    value = doc[key]
    if kind is float:
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ScenarioError(f"expected number, got {type(value).__name__}",
                                field=f"{path}.{key}")
        return float(value)
    if not isinstance(value, kind):
        raise ScenarioError(
            f"expected {kind.__name__}, got {type(value).__name__}",
            field=f"{path}.{key}")
    return value


def _span_from_doc(doc, path):
    try:
        loss = LossFunction.from_knots(
            _expect(doc, "alpha_knot_freq_hz", list, path),
            _expect(doc, "alpha_knot_db_per_km", list, path))
        return FiberSpanParams(
            length_km=_expect(doc, "length_km", float, path),
            raman_efficiency=_expect(doc, "raman_efficiency", float, path),
            dispersion_ps_nm_km=_expect(doc, "dispersion_ps_nm_km", float, path),
            loss=loss,
            input_loss_db=_expect(doc, "input_loss_db", float, path),
            output_loss_db=_expect(doc, "output_loss_db", float, path),
            lumped_losses=tuple((float(z), float(l))
                                for z, l in doc.get("lumped_losses", [])),
            gamma=float(doc.get("gamma", 1.27e-3)))
    except ScenarioError:
        raise
    except Exception as exc:
        raise ScenarioError(str(exc), field=path) from exc


def parse_scenario(doc: dict, base_dir=None) -> Scenario:
    if doc.get("schema") != SCHEMA:
        raise ScenarioError(f"unsupported schema {doc.get('schema')!r}",
                            field="schema")
    p = _expect(doc, "plan", dict, "$")
    plan = build_channel_plan(_expect(p, "center_hz", float, "plan"),
                              _expect(p, "spacing_hz", float, "plan"),
                              int(_expect(p, "channel_count", float, "plan")),
                              _expect(p, "symbol_rate_baud", float, "plan"),
                              float(p.get("slot_hz", 12.5e9)))

    roadms = {}
    for i, node in enumerate(_expect(doc, "nodes", list, "$")):
        path = f"nodes[{i}]"
        roadms[_expect(node, "id", str, path)] = RoadmSpec(
            node_id=node["id"],
            add_loss_db=float(node.get("add_loss_db", 9.0)),
            drop_loss_db=float(node.get("drop_loss_db", 9.0)),
            express_loss_db=float(node.get("express_loss_db", 11.0)))

    trxs = []
    for i, t in enumerate(doc.get("trxs", [])):
        path = f"trxs[{i}]"
        trx = TrxSpec(trx_id=_expect(t, "id", str, path),
                      node_id=_expect(t, "node", str, path),
                      frequency_hz=_expect(t, "frequency_hz", float, path),
                      trx_type=_expect(t, "type", str, path))
        if trx.node_id not in roadms:
            raise ScenarioError(f"unknown node {trx.node_id!r}", field=path)
        if trx.trx_type not in ("ACO", "DCO"):
            raise ScenarioError(f"unknown TRX type {trx.trx_type!r}", field=path)
        trxs.append(trx)

    b2b = doc.get("b2b", {})
    curves = {}
    table_file = b2b.get("table_file")
    for trx_type in ("ACO", "DCO"):
        if table_file:
            curves[trx_type] = load_curve_table(
                table_file if base_dir is None else base_dir / table_file,
                trx_type)
        else:
            penalties = b2b.get("penalties_db", {}).get(trx_type, {})
            curves[trx_type] = analytic_curve(trx_type, penalties_db=penalties)

    ols_endpoints, ols_spans, ols_amps = {}, {}, {}
    for i, ols in enumerate(_expect(doc, "olss", list, "$")):
        path = f"olss[{i}]"
        ols_id = _expect(ols, "id", str, path)
        a = _expect(ols, "a", str, path)
        b = _expect(ols, "b", str, path)
        for node in (a, b):
            if node not in roadms:
                raise ScenarioError(f"unknown endpoint {node!r}", field=path)
        spans = tuple(_span_from_doc(s, f"{path}.spans[{j}]")
                      for j, s in enumerate(_expect(ols, "spans", list, path)))
        amps = []
        for j, amp in enumerate(_expect(ols, "amps", list, path)):
            apath = f"{path}.amps[{j}]"
            amps.append(AmpDevice(
                label=_expect(amp, "label", str, apath),
                nf_db=float(amp.get("nf_db", 5.0)),
                g_min_db=float(amp.get("g_min_db", 1.0)),
                g_max_db=float(amp.get("g_max_db", 30.0)),
                p_out_max_dbm=float(amp.get("p_out_max_dbm", 23.5)),
                target_p_out_dbm=float(amp.get("target_p_out_dbm", 20.0))))
        if len(amps) != len(spans) + 1:
            raise ScenarioError(
                f"{len(spans)} spans need {len(spans) + 1} amps, got {len(amps)}",
                field=path)
        ols_endpoints[ols_id] = (a, b)
        ols_spans[ols_id] = spans
        ols_amps[ols_id] = tuple(amps)

    noise_doc = doc.get("noise", {})
    noise = NoiseConfig(
        ocm_sigma_db=float(noise_doc.get("ocm_sigma_db", 0.0)),
        otdr_sigma_db=float(noise_doc.get("otdr_sigma_db", 0.0)),
        ber_jitter_db=float(noise_doc.get("ber_jitter_db", 0.1)))

    lat_doc = doc.get("latencies", {})
    latencies = LatencyConfig(
        message_s=float(lat_doc.get("message_s", 0.001)),
        device_config_s=float(lat_doc.get("device_config_s", 0.1)),
        lpce_eval_s=float(lat_doc.get("lpce_eval_s", 0.005)),
        polling_interval_s=float(lat_doc.get("polling_interval_s", 1.0)),
        ber_window_s=float(lat_doc.get("ber_window_s", 15.0)))

    opt_doc = doc.get("optimizer", {})
    optimizer = OptimizerConfig(
        lambda_flat=float(opt_doc.get("lambda_flat", 2.0)),
        lambda_signal_flat=float(opt_doc.get("lambda_signal_flat", 1.0)),
        step_db=float(opt_doc.get("step_db", 0.1)),
        tilt_bounds_db=tuple(opt_doc.get("tilt_bounds_db", (-5.0, 5.0))),
        eval_budget=int(opt_doc.get("eval_budget", 2000)))

    script = []
    last_time = float("-inf")
    for i, action in enumerate(doc.get("script", [])):
        path = f"script[{i}]"
        t = _expect(action, "time_s", float, path)
        if t <= last_time:
            raise ScenarioError("script times must be strictly increasing",
                                field=f"{path}.time_s")
        last_time = t
        kind = _expect(action, "action", str, path)
        if kind not in ("request", "fail_link"):
            raise ScenarioError(f"unknown action {kind!r}", field=path)
        args = {k: v for k, v in action.items()
                if k not in ("time_s", "action")}
        if kind == "request":
            rate = args.get("rate_gbps")
            if not isinstance(rate, (int, float)) or rate <= 0 \
                    or rate % 100 != 0:
                raise ScenarioError("rate_gbps must be a positive multiple "
                                    "of 100", field=f"{path}.rate_gbps")
        script.append(ScriptAction(time_s=t, action=kind, args=args))

    scenario = Scenario(
        name=str(doc.get("name", "scenario")),
        plan=plan,
        seed=int(doc.get("seed", 0)),
        roadms=roadms,
        trxs=tuple(trxs),
        curves=curves,
        ols_endpoints=ols_endpoints,
        ols_spans=ols_spans,
        ols_amps=ols_amps,
        noise=noise,
        latencies=latencies,
        optimizer=optimizer,
        probe_offsets_db=tuple(doc.get("probe", {}).get(
            "offsets_db", DEFAULT_PROBE_OFFSETS_DB)),
        tx_power_dbm=float(doc.get("tx_power_dbm", 0.0)),
        design_margin_db=float(doc.get("design_margin_db", 0.0)),
        occupy_non_trx_channels=bool(doc.get("loaders", {}).get(
            "occupy_non_trx_channels", True)),
        initial_occupancy={k: list(v) for k, v in
                           doc.get("initial_occupancy", {}).items()},
        script=tuple(script))
    scenario.ground_truth_topology()   # surfaces topology inconsistencies
    return scenario


def load_scenario(path) -> Scenario:
    from pathlib import Path
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON at line {exc.lineno}: {exc.msg}",
                            field=str(path)) from exc
    return parse_scenario(doc, base_dir=path.parent)


def bundled_scenario_path(name: str = "triangle"):
    return resources.files("opticnet.data") / f"{name}.json"


def load_bundled(name: str = "triangle") -> Scenario:
    with resources.as_file(bundled_scenario_path(name)) as path:
        return load_scenario(path)


# -- bundled three-node study ------------------------------------------------

_TRIANGLE_TABLE = {
    "L1": [(65.5, 0.34, 16.6, 5.5, 0.1), (65.3, 0.34, 16.8, 1.4, 0.3),
           (65.5, 0.44, 16.7, 1.6, 0.1), (65.6, 0.34, 16.7, 0.2, 1.4),
           (65.2, 0.42, 16.7, 0.5, 0.4), (65.8, 0.34, 16.5, 0.1, 1.3)],
    "L2A": [(106.2, 0.34, 17.5, 3.6, 0.2), (107.5, 0.44, 17.9, 1.2, 0.7),
            (106.2, 0.44, 17.7, 1.5, 0.1), (108.8, 0.42, 17.7, 0.6, 0.1),
            (108.3, 0.42, 17.8, 0.2, 0.1)],
    "L2B": [(106.2, 0.42, 17.9, 1.1, 0.2), (106.8, 0.34, 17.7, 0.1, 0.1),
            (106.4, 0.34, 17.7, 0.2, 0.7), (107.3, 0.42, 17.8, 0.2, 0.1),
            (108.3, 0.42, 17.8, 0.5, 2.3)],
}
_TRIANGLE_ENDPOINTS = {"L1": ("A", "C"), "L2A": ("A", "B"), "L2B": ("B", "C")}


def triangle_scenario_doc() -> dict:
    """The bundled desk-scale study: three nodes, three multi-span lines."""
    plan_center, plan_spacing, plan_count = 193.5e12, 50e9, 75
    f_min = plan_center - (plan_count - 1) / 2 * plan_spacing
    f_max = plan_center + (plan_count - 1) / 2 * plan_spacing
    knots = np.linspace(f_min, f_max, 5)
    x = (knots - plan_center) / (f_max - f_min)

    olss = []
    for ols_id, rows in _TRIANGLE_TABLE.items():
        spans = []
        for j, (length, c_r, disp, l0, lls) in enumerate(rows):
            base = 0.190 + 0.001 * (j % 3)
            alpha = base + 0.004 * x
            spans.append({
                "length_km": length, "raman_efficiency": c_r,
                "dispersion_ps_nm_km": disp,
                "alpha_knot_freq_hz": list(knots),
                "alpha_knot_db_per_km": [round(float(v), 6) for v in alpha],
                "input_loss_db": l0, "output_loss_db": lls,
                "lumped_losses": [], "gamma": 1.1e-3,
            })
        n = len(spans)
        amps = [{"label": ("BST" if i == 0 else "PRE" if i == n else
                           f"ILA {i}"),
                 "nf_db": 4.0, "g_min_db": 1.0, "g_max_db": 30.0,
                 "p_out_max_dbm": 23.5, "target_p_out_dbm": 20.0}
                for i in range(n + 1)]
        a, b = _TRIANGLE_ENDPOINTS[ols_id]
        olss.append({"id": ols_id, "a": a, "b": b, "spans": spans,
                     "amps": amps})

    cut_types = [(192.0e12, "DCO"), (193.0e12, "ACO"),
                 (194.0e12, "DCO"), (195.0e12, "ACO")]
    trxs = [{"id": f"{node}-{int(f / 1e12)}", "node": node,
             "frequency_hz": f, "type": t}
            for node in ("A", "C") for f, t in cut_types]

    return {
        "schema": SCHEMA,
        "name": "triangle",
        "seed": 1234,
        "plan": {"center_hz": plan_center, "spacing_hz": plan_spacing,
                 "channel_count": plan_count, "symbol_rate_baud": 32e9,
                 "slot_hz": 12.5e9},
        "nodes": [{"id": n, "add_loss_db": 9.0, "drop_loss_db": 9.0,
                   "express_loss_db": 11.0} for n in ("A", "B", "C")],
        "trxs": trxs,
        "b2b": {"penalties_db": {
            "DCO": {"DP-QPSK": 0.5, "DP-16QAM": 6.5},
            "ACO": {"DP-QPSK": 1.5, "DP-16QAM": 7.5}}},
        "olss": olss,
        "loaders": {"occupy_non_trx_channels": True},
        "noise": {"ocm_sigma_db": 0.0, "otdr_sigma_db": 0.0,
                  "ber_jitter_db": 0.1},
        "latencies": {"message_s": 0.001, "device_config_s": 0.1,
                      "lpce_eval_s": 0.005, "polling_interval_s": 1.0,
                      "ber_window_s": 15.0},
        "optimizer": {"lambda_flat": 0.5, "lambda_signal_flat": 0.5,
                      "eval_budget": 2000, "step_db": 0.1,
                      "tilt_bounds_db": [-5.0, 5.0]},
        "probe": {"offsets_db": list(DEFAULT_PROBE_OFFSETS_DB)},
        "tx_power_dbm": 0.0,
        "design_margin_db": 0.0,
        "script": [
            {"time_s": 10.0, "action": "request", "src": "A", "dst": "C",
             "rate_gbps": 400},
            {"time_s": 120.0, "action": "fail_link", "link": "L1"},
        ],
    }
