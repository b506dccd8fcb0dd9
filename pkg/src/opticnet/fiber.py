"""Fiber span model: attenuation, lumped losses and first-order SRS tilt.

The per-span model is deliberately simple and fast: frequency-dependent
distributed loss (piecewise-linear loss coefficient over the band), lumped
connector/splice losses, and a first-order stimulated-Raman-scattering
exchange that tilts power from high to low frequencies.  The SRS term is
linear in frequency offset, scales with the Raman efficiency, the total
launch power and the span effective length, and conserves total power
exactly before loss is applied.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import PropagationError
from .grid import ChannelPlan
from .spectrum import PowerSpectrum
from .units import alpha_db_km_to_inv_km, db_to_lin

# Frequency shift at which the Raman gain of silica peaks; the scalar Raman
# efficiency is referenced to it, so the first-order gain slope per Hz is
# c_r / RAMAN_REFERENCE_SHIFT_HZ.
RAMAN_REFERENCE_SHIFT_HZ = 14.0e12

DEFAULT_GAMMA = 1.27e-3  # 1/W/m, standard single-mode fiber


@dataclass(frozen=True)
class LossFunction:
    """Piecewise-linear loss coefficient alpha(f) in dB/km over the band."""

    knot_freq_hz: tuple
    knot_db_per_km: tuple

    def __post_init__(self):
        f = np.asarray(self.knot_freq_hz, dtype=float)
        a = np.asarray(self.knot_db_per_km, dtype=float)
        if f.ndim != 1 or f.shape != a.shape or f.size < 1:
            raise PropagationError("loss function needs matching knot vectors")
        if np.any(np.diff(f) <= 0):
            raise PropagationError("loss-function knots must be increasing")
        if np.any(a <= 0):
            raise PropagationError("loss coefficient must be positive")
        object.__setattr__(self, "knot_freq_hz", tuple(float(x) for x in f))
        object.__setattr__(self, "knot_db_per_km", tuple(float(x) for x in a))

    @classmethod
    def flat(cls, alpha_db_per_km: float) -> "LossFunction":
        return cls((1.0,), (float(alpha_db_per_km),))

    @classmethod
    def from_knots(cls, freqs_hz, values_db_per_km) -> "LossFunction":
        return cls(tuple(freqs_hz), tuple(values_db_per_km))

    def db_per_km(self, freq_hz) -> np.ndarray:
        f = np.atleast_1d(np.asarray(freq_hz, dtype=float))
        if len(self.knot_freq_hz) == 1:
            return np.full(f.shape, self.knot_db_per_km[0])
        return np.interp(f, self.knot_freq_hz, self.knot_db_per_km)

    def mean_db_per_km(self, plan: ChannelPlan) -> float:
        return float(np.mean(self.db_per_km(plan.frequencies())))


def default_knot_frequencies(plan: ChannelPlan, count: int = 5) -> np.ndarray:
    """Evenly spaced loss-function knots spanning the channel band."""
    return np.linspace(plan.f_min, plan.f_max, count)


@dataclass(frozen=True)
class FiberSpanParams:
    """Static description of one amplified fiber span."""

    length_km: float
    raman_efficiency: float           # 1/W/km, gain at the Raman peak shift
    dispersion_ps_nm_km: float
    loss: LossFunction
    input_loss_db: float              # connector/patch loss at z = 0
    output_loss_db: float             # connector/patch loss at z = L
    lumped_losses: tuple = field(default_factory=tuple)  # ((z_km, loss_db), ...)
    gamma: float = DEFAULT_GAMMA      # 1/W/m nonlinear coefficient
    raman_reference_shift_hz: float = RAMAN_REFERENCE_SHIFT_HZ

    def __post_init__(self):
        if self.length_km <= 0:
            raise PropagationError(f"span length must be > 0, got {self.length_km}")
        if self.input_loss_db < 0 or self.output_loss_db < 0:
            raise PropagationError("connector losses must be >= 0")
        lumped = tuple((float(z), float(l)) for z, l in self.lumped_losses)
        for z, l in lumped:
            if not 0.0 < z < self.length_km:
                raise PropagationError(
                    f"lumped loss position {z} km outside (0, {self.length_km})")
            if l < 0:
                raise PropagationError("lumped losses must be >= 0")
        object.__setattr__(self, "lumped_losses", lumped)

    def alpha_inv_km(self, plan: ChannelPlan) -> np.ndarray:
        """Power attenuation 1/km at every channel frequency."""
        return alpha_db_km_to_inv_km(self.loss.db_per_km(plan.frequencies()))

    def effective_length_km(self, plan: ChannelPlan) -> float:
        """(1 - exp(-a*L)) / a with the band-mean attenuation in 1/km."""
        a = alpha_db_km_to_inv_km(self.loss.mean_db_per_km(plan))
        if a * self.length_km < 1e-12:
            return self.length_km
        return float((1.0 - np.exp(-a * self.length_km)) / a)

    def distributed_loss_db(self, plan: ChannelPlan) -> np.ndarray:
        return self.loss.db_per_km(plan.frequencies()) * self.length_km

    def total_lumped_db(self) -> float:
        return float(sum(l for _, l in self.lumped_losses))

    def total_loss_db(self, plan: ChannelPlan) -> np.ndarray:
        """Full span loss per channel in dB (connectors + fiber + lumped)."""
        return (self.input_loss_db + self.distributed_loss_db(plan)
                + self.total_lumped_db() + self.output_loss_db)


def srs_exchange_factors(plan: ChannelPlan, launch_w: np.ndarray,
                         span: FiberSpanParams) -> np.ndarray:
    """Per-channel SRS power-transfer factors for one span.

    First-order triangular-gain model: channel i sees a net gain factor
    ``1 + k * (f_mean - f_i)`` with ``k = (c_r / f_raman) * L_eff * P_total``
    and ``f_mean`` the power-weighted mean frequency.  The factors conserve
    total power exactly and reduce to unity for a single channel.
    """
    p = np.asarray(launch_w, dtype=float)
    total = float(np.sum(p))
    active = int(np.count_nonzero(p > 0))
    if total <= 0 or active < 2 or span.raman_efficiency == 0:
        return np.ones(plan.channel_count)
    freqs = plan.frequencies()
    f_mean = float(np.sum(freqs * p) / total)
    slope_per_w_km_hz = span.raman_efficiency / span.raman_reference_shift_hz
    k = slope_per_w_km_hz * span.effective_length_km(plan) * total
    factors = 1.0 + k * (f_mean - freqs)
    if np.any(factors <= 0):
        raise PropagationError(
            "SRS exchange drove a channel non-positive; first-order model "
            "invalid at this launch power")
    return factors


def span_transfer(spectrum: PowerSpectrum, span: FiberSpanParams,
                  launch_w: np.ndarray | None = None) -> PowerSpectrum:
    """Propagate a spectrum through one fiber span.

    Order of operations: input connector loss, SRS exchange (driven by the
    power entering the fiber, or by ``launch_w`` attenuated the same way if
    given), then distributed + interior lumped + output connector loss.
    Signal, ASE and NLI attenuate identically.
    """
    if spectrum.plan.channel_count == 0:
        raise PropagationError("empty spectrum")
    a0 = db_to_lin(-span.input_loss_db)
    after_input = spectrum.scaled(a0)
    driver = (after_input.total_w() if launch_w is None
              else np.asarray(launch_w, dtype=float) * a0)
    tilt = srs_exchange_factors(spectrum.plan, driver, span)
    tilted = after_input.scaled(tilt)
    rest_db = (span.distributed_loss_db(spectrum.plan)
               + span.total_lumped_db() + span.output_loss_db)
    return tilted.scaled(db_to_lin(-rest_db))
