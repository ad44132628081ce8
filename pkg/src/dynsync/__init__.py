"""Round-based simulation and verification of synchronization protocols
in dynamic networks with asynchronous starts."""

from .engine import GraphSpec, Scenario, Trace, batch, run
from .protocols import ProtocolParams

__all__ = ["GraphSpec", "Scenario", "Trace", "ProtocolParams", "batch", "run"]
