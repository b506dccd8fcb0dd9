"""Exception hierarchy shared across the package."""


class OpticnetError(Exception):
    """Base class for all package errors."""


class GridError(OpticnetError):
    """Invalid channel plan or spectrum definition."""


class PropagationError(OpticnetError):
    """Physically invalid propagation input (non-finite powers, bad span)."""


class DeviceLimitError(OpticnetError):
    """Requested amplifier setting violates device limits."""


class ProbeError(OpticnetError):
    """Probing sequence failed (unreachable controller, bad levels)."""


class FitError(OpticnetError):
    """Span characterization did not converge or was rejected."""


class TopologyError(OpticnetError):
    """Inconsistent physical topology description."""


class OptimizationError(OpticnetError):
    """Working-point search infeasible or did not converge."""


class BerRangeError(OpticnetError):
    """BER outside the invertible range of a transceiver curve.

    ``snr_lower_bound_db`` is set when the BER is below the curve floor: the
    true SNR is at least that value but not identifiable from the curve.
    """

    def __init__(self, message, snr_lower_bound_db=None):
        super().__init__(message)
        self.snr_lower_bound_db = snr_lower_bound_db


class PceError(OpticnetError):
    """Path computation failed (no path, line not ready)."""


class NotReadyError(OpticnetError):
    """Operation requires a provisioned/READY resource."""


class DeploymentError(OpticnetError):
    """Device-level rejection during lightpath deployment."""


class AgentError(OpticnetError):
    """Emulated network element rejected a message or is down."""


class ScenarioError(OpticnetError):
    """Scenario file failed validation; carries field diagnostics."""

    def __init__(self, message, field=None):
        if field:
            message = f"{field}: {message}"
        super().__init__(message)
        self.field = field
