import numpy as np
import pytest

from opticnet.errors import NotReadyError, PceError
from opticnet.lpce import (compute_margin, compute_path_formats,
                           enumerate_paths)
from opticnet.topology import OlsState
from opticnet.transceiver import DP_16QAM, DP_QPSK

CUTS = (7, 27, 47, 67)


@pytest.fixture(scope="module")
def triangle_maps(ready_topology):
    return compute_path_formats("A", "C", ready_topology)


def test_two_paths_shortest_first(triangle_maps):
    assert len(triangle_maps) == 2
    direct, via_b = triangle_maps
    assert direct.ols_sequence == ("L1",)
    assert via_b.ols_sequence == ("L2A", "L2B")
    assert direct.node_sequence == ("A", "C")
    assert via_b.node_sequence == ("A", "B", "C")


def test_direct_path_supports_16qam_at_cuts(triangle_maps):
    direct = triangle_maps[0]
    for cut in CUTS:
        assert direct.entries[cut].max_format == DP_16QAM
        assert direct.supports(cut, DP_QPSK)


def test_long_path_supports_qpsk_only_at_cuts(triangle_maps):
    via_b = triangle_maps[1]
    for cut in CUTS:
        assert via_b.entries[cut].max_format == DP_QPSK
        assert not via_b.supports(cut, DP_16QAM)


def test_prefix_path_dominates(ready_topology):
    to_b = compute_path_formats("A", "B", ready_topology)
    direct_ab = next(m for m in to_b if m.ols_sequence == ("L2A",))
    full = compute_path_formats("A", "C", ready_topology)
    via_b = next(m for m in full if m.ols_sequence == ("L2A", "L2B"))
    assert np.all(direct_ab.gsnr() >= via_b.gsnr())


def test_format_monotonicity(triangle_maps):
    for path_map in triangle_maps:
        for entry in path_map.entries:
            if entry.margins_db[DP_16QAM.name] >= 0:
                assert entry.margins_db[DP_QPSK.name] >= 0


def test_same_source_destination_rejected(ready_topology):
    with pytest.raises(PceError):
        compute_path_formats("A", "A", ready_topology)


def test_not_ready_ols_errors(triangle_scenario):
    topo = triangle_scenario.ground_truth_topology()  # no working points
    with pytest.raises(NotReadyError):
        compute_path_formats("A", "C", topo)


def test_failed_ols_excluded_from_enumeration(ready_topology):
    ready_topology.olss["L1"].state = OlsState.FAILED
    try:
        paths = enumerate_paths(ready_topology, "A", "C")
        assert [p[1] for p in paths] == [("L2A", "L2B")]
    finally:
        ready_topology.olss["L1"].state = OlsState.READY


def test_no_path_between_disconnected_nodes(ready_topology):
    for ols in ("L1", "L2A"):
        ready_topology.olss[ols].state = OlsState.FAILED
    try:
        with pytest.raises(PceError, match="no path"):
            compute_path_formats("A", "C", ready_topology)
    finally:
        for ols in ("L1", "L2A"):
            ready_topology.olss[ols].state = OlsState.READY


def test_forced_infeasibility_yields_none(ready_topology):
    # a 20 dB pad on the line makes even the lowest format infeasible
    maps = compute_path_formats("A", "C", ready_topology,
                                design_margin_db=20.0)
    for path_map in maps:
        if path_map.ols_sequence == ("L2A", "L2B"):
            assert all(e.max_format is None for e in path_map.entries)


def test_margin_examples():
    assert compute_margin(27.1, 24.0) == pytest.approx(3.1)
    assert compute_margin(17.7, 17.8) == pytest.approx(-0.1)
    assert compute_margin(21.0, 21.0) == 0.0
    with pytest.raises(PceError):
        compute_margin(float("nan"), 20.0)
