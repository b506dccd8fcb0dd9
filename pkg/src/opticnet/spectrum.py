"""Per-channel power state propagated through the line.

A :class:`PowerSpectrum` carries three aligned vectors: the signal power and
the accumulated ASE and NLI noise powers, all in watt.  Instances are
immutable; every propagation step returns a new spectrum.
"""

from dataclasses import dataclass

import numpy as np

from .errors import GridError, PropagationError
from .grid import ChannelPlan
from .units import clamp_floor, dbm_to_w


def _freeze(vec, count, name):
    a = np.array(vec, dtype=float)
    if a.shape != (count,):
        raise GridError(f"{name} must have length {count}, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise PropagationError(f"non-finite {name}")
    if np.any(a < 0):
        raise PropagationError(f"negative {name}")
    a = clamp_floor(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class PowerSpectrum:
    plan: ChannelPlan
    signal_w: np.ndarray
    ase_w: np.ndarray
    nli_w: np.ndarray

    def __post_init__(self):
        n = self.plan.channel_count
        object.__setattr__(self, "signal_w", _freeze(self.signal_w, n, "signal_w"))
        object.__setattr__(self, "ase_w", _freeze(self.ase_w, n, "ase_w"))
        object.__setattr__(self, "nli_w", _freeze(self.nli_w, n, "nli_w"))

    @classmethod
    def flat(cls, plan: ChannelPlan, per_channel_dbm: float) -> "PowerSpectrum":
        """Noise-free flat comb at the given per-channel power."""
        p = np.full(plan.channel_count, dbm_to_w(per_channel_dbm))
        z = np.zeros(plan.channel_count)
        return cls(plan, p, z, z.copy())

    def total_w(self) -> np.ndarray:
        """Total per-channel power (signal + ASE + NLI)."""
        return self.signal_w + self.ase_w + self.nli_w

    def total_power_w(self) -> float:
        return float(np.sum(self.total_w()))

    def scaled(self, factor) -> "PowerSpectrum":
        """Multiply every component by a scalar or per-channel factor."""
        f = np.asarray(factor, dtype=float)
        return PowerSpectrum(self.plan, self.signal_w * f, self.ase_w * f,
                             self.nli_w * f)

    def with_added_nli(self, nli_w) -> "PowerSpectrum":
        return PowerSpectrum(self.plan, self.signal_w, self.ase_w,
                             self.nli_w + np.asarray(nli_w, dtype=float))
