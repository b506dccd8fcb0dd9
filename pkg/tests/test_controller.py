import copy

import pytest

from conftest import build_stack
from opticnet.controller import TopologyAbstraction
from opticnet.errors import AgentError, NotReadyError, TopologyError


def provision(stack):
    abstraction, routing = stack.controller.provision_network()
    return abstraction, routing


def test_provision_triangle(stack):
    abstraction, routing = provision(stack)
    assert sorted(abstraction.nodes) == ["A", "B", "C"]
    assert sorted(abstraction.links) == ["L1", "L2A", "L2B"]
    assert all(l.state == "UP" for l in abstraction.links.values())
    # loaders hold every non-transceiver channel; the four CUTs are free
    free = {c for c in range(75)
            if abstraction.links["L1"].free(c)}
    assert free == {7, 27, 47, 67}
    assert routing.candidate_paths("A", "C")[0][1] == ("L1",)
    assert routing.candidate_paths("A", "C")[1][1] == ("L2A", "L2B")


def test_provision_reflects_predeployed_channels(triangle_scenario,
                                                 ready_topology):
    scenario = copy.deepcopy(triangle_scenario)
    scenario.initial_occupancy["L1"] = [7, 27]
    s = build_stack(scenario, ready_topology)
    try:
        abstraction, _ = s.controller.provision_network()
        assert not abstraction.links["L1"].free(7)
        assert not abstraction.links["L1"].free(27)
        assert abstraction.links["L1"].free(47)
    finally:
        s.network.close()


def test_provision_fails_atomically_with_node_down(stack):
    stack.network.down_agents.add("roadm:B")
    with pytest.raises(AgentError, match="unreachable"):
        provision(stack)
    assert not stack.controller.provisioned
    with pytest.raises(NotReadyError):
        stack.controller.submit_request("A", "C", 400)


def test_400g_two_16qam_on_short_line(stack):
    provision(stack)
    request = stack.controller.submit_request("A", "C", 400)
    assert request.state == "SATISFIED"
    lps = [stack.controller.lightpaths[i] for i in request.lightpath_ids]
    assert len(lps) == 2
    assert all(lp.state == "ACTIVE" for lp in lps)
    assert all(lp.format_name == "DP-16QAM" for lp in lps)
    assert all(lp.links == ("L1",) for lp in lps)
    assert sorted(lp.channel for lp in lps) == [7, 27]  # lowest free CUTs
    # 50 GHz channel = 4 slots of 12.5 GHz on every crossed link
    bitmap = stack.controller.abstraction.slot_bitmap("L1")
    for channel in (7, 27):
        assert all(bitmap[channel * 4 + k] for k in range(4))
    stack.controller.check_invariants()


def test_400g_falls_back_to_4_qpsk_when_short_line_failed(stack):
    provision(stack)
    stack.controller.abstraction.links["L1"].state = "FAILED"
    stack.twin.olss["L1"].state = stack.twin.olss["L1"].state.__class__.FAILED
    request = stack.controller.submit_request("A", "C", 400)
    assert request.state == "SATISFIED"
    lps = [stack.controller.lightpaths[i] for i in request.lightpath_ids]
    assert len(lps) == 4
    assert all(lp.format_name == "DP-QPSK" for lp in lps)
    assert all(lp.links == ("L2A", "L2B") for lp in lps)
    assert all(lp.node_seq == ("A", "B", "C") for lp in lps)
    stack.controller.check_invariants()


def test_no_capacity_yields_partial_with_shortfall(stack):
    provision(stack)
    for link in stack.controller.abstraction.links.values():
        for channel in (7, 27, 47, 67):
            link.channel_owners.setdefault(channel, "loader")
    request = stack.controller.submit_request("A", "C", 100)
    assert request.state == "PARTIAL"
    assert request.shortfall_gbps == 100
    assert request.lightpath_ids == []


def test_mixed_formats_for_300g(stack):
    provision(stack)
    request = stack.controller.submit_request("A", "C", 300)
    assert request.state == "SATISFIED"
    formats = sorted(stack.controller.lightpaths[i].format_name
                     for i in request.lightpath_ids)
    assert formats == ["DP-16QAM", "DP-QPSK"]


def test_deploy_rolls_back_on_device_rejection(stack):
    provision(stack)
    stack.network.down_agents.add("trx:C-192")   # dst TRX rejects
    request = stack.controller.submit_request("A", "C", 400)
    # the lightpath on channel 7 fails and rolls back; others are fine
    lps = [stack.controller.lightpaths[i] for i in request.lightpath_ids]
    assert all(lp.channel != 7 for lp in lps)
    assert request.state == "PARTIAL"
    assert request.shortfall_gbps == 200
    roadm_a = stack.network.agents["roadm:A"]
    assert all(xc["channel"] != 7 for xc in roadm_a.cross_connects)
    stack.controller.check_invariants()


def test_deploy_conflict_triggers_single_replan(stack):
    provision(stack)
    controller = stack.controller
    request_doc = controller.requests
    maps = controller._format_maps("A", "C")
    from opticnet.controller import TrafficRequest
    request = TrafficRequest(request_id="R77", src="A", dst="C",
                             rate_gbps=200)
    controller.requests["R77"] = request
    plan = controller.rsa(request, maps)
    assert [lp.channel for lp in plan] == [7]
    # someone grabs channel 7 between planning and deployment
    controller.abstraction.links["L1"].channel_owners[7] = "loader"
    outcomes = controller.deploy(plan)
    assert any(v.startswith("replanned") for v in outcomes.values())
    controller._settle_request(request)
    assert request.state == "SATISFIED"
    lps = [controller.lightpaths[i] for i in request.lightpath_ids]
    assert [lp.channel for lp in lps] == [27]
    stack.controller.check_invariants()


def test_deploy_onto_failed_link_rejected_preflight(stack):
    provision(stack)
    controller = stack.controller
    maps = controller._format_maps("A", "C")
    from opticnet.controller import TrafficRequest
    request = TrafficRequest(request_id="R9", src="A", dst="C", rate_gbps=200)
    controller.requests["R9"] = request
    plan = controller.rsa(request, maps)
    controller.abstraction.links["L1"].state = "FAILED"
    outcomes = controller.deploy(plan)
    assert all("link down" in v for v in outcomes.values())


def test_failure_recovery_full_cycle(stack):
    provision(stack)
    controller = stack.controller
    request = controller.submit_request("A", "C", 400)
    assert request.state == "SATISFIED"

    stack.network.inject_failure("L1")
    events = stack.nos.detect_failures()
    assert events == ["L1"]
    report = controller.handle_failure("L1")

    assert report.lost_gbps == 400
    assert report.restored_gbps == 400
    assert set(report.stages_s) == {"topology_update",
                                    "lost_traffic_estimation", "lpce",
                                    "establishment"}
    assert all(v > 0 for v in report.stages_s.values())
    assert report.total_s == pytest.approx(sum(report.stages_s.values()))
    assert report.request_outcomes == {request.request_id: "SATISFIED"}
    new_lps = [controller.lightpaths[i] for i in report.new_lightpath_ids]
    assert len(new_lps) == 4
    assert all(lp.format_name == "DP-QPSK" for lp in new_lps)
    assert all(lp.links == ("L2A", "L2B") for lp in new_lps)
    controller.check_invariants()

    # recovery on an already-failed link is a no-op
    second = controller.handle_failure("L1")
    assert second.lost_gbps == 0 and second.new_lightpath_ids == []

    # the event log shows the two workflows in interaction order
    verbs = [e["verb"] for e in stack.network.events
             if e["actor"] in ("oonc", "plase", "nos")]
    for sequence in (["request", "lpce", "rsa", "deploy"],
                     ["failure", "topology_update",
                      "lost_traffic_estimation", "lpce", "establish"]):
        cursor = 0
        for verb in sequence:
            cursor = verbs.index(verb, cursor) + 1


def test_recovery_without_alternative_path(stack):
    provision(stack)
    controller = stack.controller
    request = controller.submit_request("A", "C", 400)
    stack.network.inject_failure("L1")
    controller.handle_failure("L1")
    stack.network.inject_failure("L2A")
    report = controller.handle_failure("L2A")
    assert report.restored_gbps == 0
    assert controller.requests[request.request_id].state == "FAILED"
    assert controller.requests[request.request_id].shortfall_gbps == 400
    controller.check_invariants()


def test_cut_idle_link_recovers_nothing(stack):
    provision(stack)
    report = stack.controller.handle_failure("L2B")
    assert report.lost_gbps == 0
    assert report.new_lightpath_ids == []
    assert stack.controller.abstraction.links["L2B"].state == "FAILED"


def test_unknown_link_failure(stack):
    provision(stack)
    with pytest.raises(TopologyError):
        stack.controller.handle_failure("L99")


def test_abstraction_export_import_round_trip(stack):
    abstraction, _ = provision(stack)
    stack.controller.submit_request("A", "C", 400)
    doc = stack.controller.abstraction.to_doc()
    rebuilt = TopologyAbstraction.from_doc(stack.scenario.plan, doc)
    assert rebuilt.to_doc() == doc
    for link_id in abstraction.links:
        assert rebuilt.slot_bitmap(link_id) == \
            stack.controller.abstraction.slot_bitmap(link_id)
