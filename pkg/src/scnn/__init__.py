"""Cycle-accurate emulator of a switched-capacitor neuromorphic system.

128 presynaptic rows with short-term plasticity, a 128 x 64 synapse matrix
and 64 leaky integrate-and-fire neurons, plus the packet protocol and an
experiment harness.
"""

from .engine import Engine, EngineConfig, RunRecord
from .kernel import DEFAULT_BACKEND
from .neuron import NeuronParams
from .plasticity import LtpParams, SynapseWord
from .presynapse import StpParams

__all__ = [
    "DEFAULT_BACKEND",
    "Engine",
    "EngineConfig",
    "LtpParams",
    "NeuronParams",
    "RunRecord",
    "StpParams",
    "SynapseWord",
]
