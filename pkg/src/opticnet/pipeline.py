"""End-to-end study pipeline over an emulated data plane.

Boot: build the emulation, probe and characterize every line, optimize and
apply the amplifier working points.  Run: provision the controller, execute
the scripted traffic/failure actions, survey transmission performance, and
write the report artifacts.
"""

import time
from dataclasses import dataclass, field
from pathlib import Path

from . import reports
from .ampopt import apply_working_point, optimize_ols
from .characterization import (DeviceDescriptions, SpanFitConfig,
                               VirtualTopology, append_records,
                               build_phy_topology, fit_span,
                               run_probe_sequence)
from .controller import Oonc
from .emulator import EmulatedNetwork, NosHandle, OlcHandle
from .errors import BerRangeError, OpticnetError
from .lpce import compute_path_formats
from .northbound import NorthboundServer
from .scenario import Scenario
from .transceiver import FORMATS, ber_to_snr


@dataclass
class StudyResult:
    scenario: Scenario
    network: EmulatedNetwork
    nos: NosHandle
    controller: Oonc
    records: list
    solutions: list
    topology: "PhyTopology"
    survey: list = field(default_factory=list)
    recovery_reports: list = field(default_factory=list)
    requests: list = field(default_factory=list)
    path_maps: list = field(default_factory=list)
    boot_wall_s: float = 0.0

    def close(self):
        self.network.close()


def characterize_all(network: EmulatedNetwork, scenario: Scenario) -> list:
    """Probe every line and fit every span; records in span order."""
    records = []
    for ols_id in sorted(scenario.ols_endpoints):
        olc = OlcHandle(network, ols_id)
        traces, probe_pairs = run_probe_sequence(olc)
        for index, (trace, probes) in enumerate(zip(traces, probe_pairs)):
            truth = scenario.ols_spans[ols_id][index]
            config = SpanFitConfig(
                plan=scenario.plan,
                dispersion_ps_nm_km=truth.dispersion_ps_nm_km,
                gamma=truth.gamma)
            records.append(fit_span(trace, probes, config,
                                    timestamp=network.scheduler.now))
    return records


def boot(scenario: Scenario, transport: str = "inproc") -> StudyResult:
    """Characterize, optimize and arm the whole network; controller ready."""
    t0 = time.perf_counter()
    network = EmulatedNetwork(scenario, transport=transport)
    records = characterize_all(network, scenario)

    virtual = VirtualTopology(
        nodes=tuple(sorted(scenario.roadms)),
        ols_endpoints=dict(scenario.ols_endpoints),
        span_counts={k: len(v) for k, v in scenario.ols_spans.items()})
    devices = DeviceDescriptions(
        plan=scenario.plan, roadms=dict(scenario.roadms),
        amp_devices=dict(scenario.ols_amps), trxs=scenario.trxs,
        curves=dict(scenario.curves))
    topology = build_phy_topology(records, virtual, devices)

    input_dbm = scenario.tx_power_dbm \
        - min(r.add_loss_db for r in scenario.roadms.values())
    solutions = []
    for ols_id in sorted(topology.olss):
        solution = optimize_ols(topology.olss[ols_id], scenario.plan,
                                input_per_channel_dbm=input_dbm,
                                config=scenario.optimizer)
        solutions.append(solution)
        olc = OlcHandle(network, ols_id)
        apply_working_point(solution, olc)
        topology.olss[ols_id] = topology.olss[ols_id].with_operating_points(
            solution.operating_points)

    nos = NosHandle(network)
    controller = Oonc(
        nos, topology, clock=network.scheduler, log=network.log_event,
        design_margin_db=scenario.design_margin_db,
        tx_power_dbm=scenario.tx_power_dbm,
        lpce_eval_cost_s=scenario.latencies.scaled("lpce_eval_s"),
        min_stage_cost_s=scenario.latencies.scaled("message_s"))
    return StudyResult(scenario=scenario, network=network, nos=nos,
                       controller=controller, records=records,
                       solutions=solutions, topology=topology,
                       boot_wall_s=time.perf_counter() - t0)


def transmission_survey(study: StudyResult) -> list:
    """Sequentially light every transceiver pair on every path and read BER.

    Mirrors a measurement campaign: per (path, channel under test, feasible
    format) one lightpath is wired, its BER sampled and converted back to a
    GSNR estimate, and the margin against the twin prediction recorded.
    """
    scenario = study.scenario
    nos = study.nos
    plan = scenario.plan
    survey = []
    trx_pairs = {}
    for trx in scenario.trxs:
        channel = plan.index_of(trx.frequency_hz)
        trx_pairs.setdefault(channel, {})[trx.node_id] = trx

    pairs = sorted({tuple(sorted(d)) for d in trx_pairs.values()
                    if len(d) >= 2})
    if not pairs:
        return survey
    src, dst = pairs[0]
    maps = compute_path_formats(src, dst, study.topology,
                                design_margin_db=scenario.design_margin_db,
                                tx_power_dbm=scenario.tx_power_dbm)
    study.path_maps = maps
    for path_map in maps:
        for channel in sorted(trx_pairs):
            ends = trx_pairs[channel]
            if src not in ends or dst not in ends:
                continue
            trx_a, trx_b = ends[src], ends[dst]
            entry = path_map.entries[channel]
            for fmt in FORMATS:
                feasible = entry.margins_db[fmt.name] >= 0
                base = {"path_id": path_map.path_id,
                        "cut_freq_hz": plan.frequencies()[channel],
                        "trx_type": trx_a.trx_type, "format": fmt.name,
                        "predicted_db": round(entry.gsnr_db, 4)}
                if not feasible:
                    survey.append({**base, "ber": None, "estimated_db": None,
                                   "margin_db": None, "lower_bound_db": None})
                    continue
                links = path_map.ols_sequence
                nodes = path_map.node_sequence
                nos.configure_trx(trx_a.trx_id, fmt.name, enable=True)
                nos.configure_trx(trx_b.trx_id, fmt.name, enable=True)
                hops = [(nodes[0], f"trx:{trx_a.trx_id}", f"line:{links[0]}")]
                for i in range(1, len(links)):
                    hops.append((nodes[i], f"line:{links[i - 1]}",
                                 f"line:{links[i]}"))
                hops.append((nodes[-1], f"line:{links[-1]}",
                             f"trx:{trx_b.trx_id}"))
                for node, source, sink in hops:
                    nos.add_xc(node, channel, source, sink)
                sample = nos.poll_ber(trx_a.trx_id)
                curve = scenario.curves[trx_a.trx_type]
                try:
                    estimated = ber_to_snr(sample["ber"], fmt, curve)
                    survey.append({**base, "ber": sample["ber"],
                                   "estimated_db": round(estimated, 4),
                                   "margin_db": round(
                                       estimated - entry.gsnr_db, 4),
                                   "lower_bound_db": None})
                except BerRangeError as exc:
                    survey.append({**base, "ber": sample["ber"],
                                   "estimated_db": None, "margin_db": None,
                                   "lower_bound_db":
                                       exc.snr_lower_bound_db})
                for node, source, sink in hops:
                    nos.remove_xc(node, channel, source, sink)
                nos.configure_trx(trx_a.trx_id, None, enable=False)
                nos.configure_trx(trx_b.trx_id, None, enable=False)
    return survey


def execute_script(study: StudyResult):
    controller = study.controller
    network = study.network
    for action in study.scenario.script:
        network.scheduler.run_until(action.time_s)
        if action.action == "request":
            request = controller.submit_request(action.args["src"],
                                                action.args["dst"],
                                                int(action.args["rate_gbps"]))
            study.requests.append(request)
        elif action.action == "fail_link":
            network.inject_failure(action.args["link"])
            for link_id in study.nos.detect_failures():
                study.recovery_reports.append(
                    controller.handle_failure(link_id))


def run_study(scenario: Scenario, transport: str = "inproc") -> StudyResult:
    study = boot(scenario, transport=transport)
    study.controller.provision_network()
    study.survey = transmission_survey(study)
    execute_script(study)
    return study


def run_checks(study: StudyResult) -> list:
    """Post-run consistency checks; returns human-readable violations."""
    problems = []
    try:
        study.controller.check_invariants()
    except AssertionError as exc:
        problems.append(f"occupancy invariant: {exc}")
    for solution in study.solutions:
        if solution.flatness_db > 1.0:
            problems.append(f"{solution.ols_id}: GSNR flatness "
                            f"{solution.flatness_db:.2f} dB above 1.0 dB")
        ols = study.topology.olss[solution.ols_id]
        for op, dev in zip(solution.operating_points, ols.amps):
            if op.mode.value == "constant_gain" and not \
                    dev.g_min_db <= op.gain_db <= dev.g_max_db:
                problems.append(f"{solution.ols_id} {dev.label}: gain "
                                f"{op.gain_db:.1f} dB outside device limits")
            if op.p_out_dbm > dev.p_out_max_dbm:
                problems.append(f"{solution.ols_id} {dev.label}: output "
                                f"power above device maximum")
    for record in study.records:
        if record.residual_rms_db > 0.5:
            problems.append(f"{record.span_id}: characterization residual "
                            f"{record.residual_rms_db:.2f} dB above 0.5 dB")
    return problems


def write_artifacts(study: StudyResult, data_dir):
    data_dir = Path(data_dir)
    data_dir.mkdir(parents=True, exist_ok=True)

    records_by_line = {}
    for record in study.records:
        line_id = record.span_id.rsplit("/", 1)[0]
        records_by_line.setdefault(line_id, []).append(record)
    reports.write_text(data_dir / "characterization.txt",
                       reports.characterization_table(records_by_line))
    append_records(data_dir / "characterization.jsonl", study.records)

    reports.write_text(data_dir / "working_points.txt",
                       reports.working_point_table(study.solutions))
    reports.write_json(data_dir / "working_points.json", [
        {"ols_id": s.ols_id, "mean_gsnr_db": round(s.mean_gsnr_db, 4),
         "flatness_db": round(s.flatness_db, 4),
         "operating_points": [
             {"label": label, "mode": op.mode.value,
              "gain_db": round(op.gain_db, 4),
              "tilt_db": round(op.tilt_db, 4),
              "p_out_dbm": round(op.p_out_dbm, 4)}
             for label, op in zip(
                 ["BST"] + [f"ILA {i}" for i in
                            range(1, len(s.operating_points) - 1)] + ["PRE"],
                 s.operating_points)]}
        for s in sorted(study.solutions, key=lambda s: s.ols_id)])

    reports.write_text(data_dir / "performance.txt",
                       reports.performance_table(study.survey))
    reports.write_json(data_dir / "performance.json", study.survey)

    recovery_text = "".join(reports.recovery_table(r) + "\n"
                            for r in study.recovery_reports) or \
        "no failures scripted\n"
    reports.write_text(data_dir / "recovery.txt", recovery_text)
    reports.write_json(data_dir / "recovery.json",
                       [r.to_doc() for r in study.recovery_reports])

    if study.path_maps:
        reports.write_text(data_dir / "gsnr_curves.tsv",
                           reports.gsnr_curve_tsv(study.path_maps,
                                                  study.scenario.plan))
    study.network.dump_event_log(data_dir / "events.log")


def serve_study(scenario: Scenario, port: int, host="127.0.0.1",
                transport: str = "inproc") -> tuple:
    """Boot the network and expose the controller northbound over HTTP."""
    study = boot(scenario, transport=transport)
    study.controller.provision_network()

    def injector(link_id):
        study.network.inject_failure(link_id)
        study.nos.detect_failures()

    server = NorthboundServer(study.controller, failure_injector=injector,
                              host=host, port=port)
    return study, server
