"""crowdrep: a deterministic, replayable crowdsourcing marketplace.

Every state-mutating operation is an entry on a hash-chained, signed
ledger; platform state is a pure fold over the chain.  On top of the
protocol sits a seeded multi-agent simulation harness used to study
reputation dynamics under adversarial behavior.
"""

__version__ = "0.1.0"

from .params import SCALE, ProtocolParams
from .node import Node

__all__ = ["SCALE", "ProtocolParams", "Node", "__version__"]
