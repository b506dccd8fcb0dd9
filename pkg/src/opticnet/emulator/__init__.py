from .network import EmulatedNetwork, NosHandle, OlcHandle
from .scheduler import Scheduler

__all__ = ["EmulatedNetwork", "NosHandle", "OlcHandle", "Scheduler"]
