import numpy as np
import pytest

from opticnet.errors import GridError
from opticnet.grid import build_channel_plan


def test_75_channel_c_band_comb_edges():
    plan = build_channel_plan(193.5e12, 50e9, 75, 32e9)
    freqs = plan.frequencies()
    assert freqs.shape == (75,)
    assert freqs[0] == pytest.approx(191.65e12)
    assert freqs[-1] == pytest.approx(195.35e12)
    assert np.all(np.diff(freqs) > 0)
    assert plan.slots_per_channel == 4
    assert plan.slot_count == 300


def test_single_channel_degenerate_grid():
    plan = build_channel_plan(193.5e12, 50e9, 1, 32e9)
    assert plan.frequencies().tolist() == [193.5e12]
    assert plan.f_min == plan.f_max == 193.5e12


def test_spacing_below_symbol_rate_rejected():
    with pytest.raises(GridError):
        build_channel_plan(193.5e12, 25e9, 75, 32e9)


def test_spacing_must_align_to_slot_granularity():
    with pytest.raises(GridError):
        build_channel_plan(193.5e12, 40e9, 8, 32e9)


def test_zero_channels_rejected():
    with pytest.raises(GridError):
        build_channel_plan(193.5e12, 50e9, 0, 32e9)


def test_index_of_cut_frequencies():
    plan = build_channel_plan(193.5e12, 50e9, 75, 32e9)
    assert plan.index_of(192e12) == 7
    assert plan.index_of(193e12) == 27
    assert plan.index_of(194e12) == 47
    assert plan.index_of(195e12) == 67
    with pytest.raises(GridError):
        plan.index_of(192.013e12)


def test_channel_slots():
    plan = build_channel_plan(193.5e12, 50e9, 75, 32e9)
    assert list(plan.channel_slots(0)) == [0, 1, 2, 3]
    assert list(plan.channel_slots(7)) == [28, 29, 30, 31]
