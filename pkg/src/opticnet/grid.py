"""Fixed-grid DWDM channel plan."""

from dataclasses import dataclass

import numpy as np

from .errors import GridError

DEFAULT_SLOT_HZ = 12.5e9


@dataclass(frozen=True)
class ChannelPlan:
    """Evenly spaced channel comb around a center frequency.

    Channel i sits at ``center + (i - (count - 1)/2) * spacing`` so the comb
    is symmetric around ``center_hz`` and strictly increasing in i.
    """

    center_hz: float
    spacing_hz: float
    channel_count: int
    symbol_rate_baud: float
    slot_hz: float = DEFAULT_SLOT_HZ

    def __post_init__(self):
        if self.channel_count < 1:
            raise GridError(f"channel_count must be >= 1, got {self.channel_count}")
        if self.spacing_hz <= 0:
            raise GridError(f"spacing must be > 0, got {self.spacing_hz}")
        if self.symbol_rate_baud > self.spacing_hz:
            raise GridError(
                f"symbol rate {self.symbol_rate_baud:.3e} exceeds spacing "
                f"{self.spacing_hz:.3e} (carrier overlap)"
            )
        ratio = self.spacing_hz / self.slot_hz
        if abs(ratio - round(ratio)) > 1e-9:
            raise GridError(
                f"spacing {self.spacing_hz:.3e} is not a multiple of the "
                f"{self.slot_hz:.3e} slot granularity"
            )

    @property
    def slots_per_channel(self) -> int:
        return int(round(self.spacing_hz / self.slot_hz))

    @property
    def slot_count(self) -> int:
        return self.channel_count * self.slots_per_channel

    def frequencies(self) -> np.ndarray:
        """Center frequency of every channel, ascending, in Hz."""
        i = np.arange(self.channel_count, dtype=float)
        return self.center_hz + (i - (self.channel_count - 1) / 2.0) * self.spacing_hz

    @property
    def f_min(self) -> float:
        return float(self.frequencies()[0])

    @property
    def f_max(self) -> float:
        return float(self.frequencies()[-1])

    def index_of(self, frequency_hz: float) -> int:
        """Channel index whose center matches ``frequency_hz`` (within 1 Hz)."""
        freqs = self.frequencies()
        idx = int(np.argmin(np.abs(freqs - frequency_hz)))
        if abs(freqs[idx] - frequency_hz) > 1.0:
            raise GridError(f"{frequency_hz:.6e} Hz is not on the channel grid")
        return idx

    def channel_slots(self, index: int) -> range:
        """Spectrum-slot indices occupied by channel ``index``."""
        k = self.slots_per_channel
        return range(index * k, (index + 1) * k)


def build_channel_plan(center_hz, spacing_hz, count, symbol_rate_baud,
                       slot_hz=DEFAULT_SLOT_HZ) -> ChannelPlan:
    """Validate and build a :class:`ChannelPlan`."""
    return ChannelPlan(float(center_hz), float(spacing_hz), int(count),
                       float(symbol_rate_baud), float(slot_hz))
