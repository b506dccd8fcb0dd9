import copy
from types import SimpleNamespace

import pytest

from opticnet.ampopt import optimize_ols
from opticnet.controller import Oonc
from opticnet.emulator import EmulatedNetwork, NosHandle, OlcHandle
from opticnet.scenario import load_bundled


@pytest.fixture(scope="session")
def triangle_scenario():
    return load_bundled("triangle")


@pytest.fixture(scope="session")
def triangle_solutions(triangle_scenario):
    """Optimizer-produced working points for the bundled triangle."""
    scenario = triangle_scenario
    topo = scenario.ground_truth_topology()
    input_dbm = scenario.tx_power_dbm - 9.0  # flat add loss in the bundle
    return {ols_id: optimize_ols(ols, scenario.plan,
                                 input_per_channel_dbm=input_dbm,
                                 config=scenario.optimizer)
            for ols_id, ols in sorted(topo.olss.items())}


@pytest.fixture(scope="session")
def ready_topology(triangle_scenario, triangle_solutions):
    """Ground-truth triangle with the working points applied."""
    topo = triangle_scenario.ground_truth_topology()
    for ols_id, solution in triangle_solutions.items():
        topo.olss[ols_id] = topo.olss[ols_id].with_operating_points(
            solution.operating_points)
    return topo


def build_stack(scenario, topology, transport="inproc"):
    """Emulated network with applied working points + a controller over it."""
    twin = copy.deepcopy(topology)
    network = EmulatedNetwork(scenario, transport=transport)
    for ols_id, ols in twin.olss.items():
        olc = OlcHandle(network, ols_id)
        for index, op in enumerate(ols.operating_points):
            olc.configure_amp(index, op)
        olc.mark_ready()
    nos = NosHandle(network)
    controller = Oonc(
        nos, twin, clock=network.scheduler, log=network.log_event,
        design_margin_db=scenario.design_margin_db,
        tx_power_dbm=scenario.tx_power_dbm,
        lpce_eval_cost_s=scenario.latencies.lpce_eval_s,
        min_stage_cost_s=scenario.latencies.message_s)
    return SimpleNamespace(network=network, nos=nos, controller=controller,
                           twin=twin, scenario=scenario)


@pytest.fixture()
def stack(triangle_scenario, ready_topology):
    s = build_stack(triangle_scenario, ready_topology)
    yield s
    s.network.close()
