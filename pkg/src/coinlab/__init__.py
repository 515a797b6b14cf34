"""coinlab: a deterministic simulation lab for asynchronous common coins."""

from .config import SystemConfig
from .sim import (Adversary, AdversaryDecision, Envelope, NonTerminationError,
                  Simulator, Trace, run_simulation)
from .adversaries import make_adversary

__all__ = [
    "Adversary",
    "AdversaryDecision",
    "Envelope",
    "NonTerminationError",
    "Simulator",
    "SystemConfig",
    "Trace",
    "make_adversary",
    "run_simulation",
]
