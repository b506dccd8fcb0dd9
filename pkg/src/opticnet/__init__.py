"""Digital-twin driven control framework for disaggregated optical lines.

Core building blocks:

- :mod:`opticnet.grid`, :mod:`opticnet.spectrum`, :mod:`opticnet.fiber`,
  :mod:`opticnet.edfa`, :mod:`opticnet.nli`, :mod:`opticnet.line` -- the
  frequency-resolved physical-layer twin (GSNR per channel for any line).
- :mod:`opticnet.characterization` -- probing and span parameter fitting.
- :mod:`opticnet.ampopt` -- amplifier working-point optimization.
- :mod:`opticnet.transceiver`, :mod:`opticnet.lpce` -- BER/SNR curves and
  the lightpath computation engine.
- :mod:`opticnet.controller`, :mod:`opticnet.northbound` -- routing/spectrum
  assignment, deployment, failure recovery, HTTP northbound.
- :mod:`opticnet.emulator` -- discrete-event data-plane emulation.
- :mod:`opticnet.scenario`, :mod:`opticnet.pipeline`, :mod:`opticnet.cli` --
  scenario files, the end-to-end pipeline and the ``netctl`` tool.
"""

from .grid import ChannelPlan, build_channel_plan
from .spectrum import PowerSpectrum
from .fiber import FiberSpanParams, LossFunction, span_transfer
from .edfa import EdfaMode, EdfaOperatingPoint, edfa_apply
from .nli import nli_span
from .line import OlsDescriptor, gsnr_db, propagate_ols

__all__ = [
    "ChannelPlan", "build_channel_plan", "PowerSpectrum", "FiberSpanParams",
    "LossFunction", "span_transfer", "EdfaMode", "EdfaOperatingPoint",
    "edfa_apply", "nli_span", "OlsDescriptor", "gsnr_db", "propagate_ols",
]

__version__ = "0.1.0"
