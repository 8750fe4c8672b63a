"""Identification of generalized-Ward dynamic equivalents of external grid areas."""

from .errors import (
    ConfigError,
    GridError,
    IdentificationError,
    InitializationError,
    NumericalError,
    PowerFlowError,
    RecordError,
    ShortCircuitError,
    SimulationError,
    ValidationError,
)
from .grid import Network, WardEquivalentParams, apply_ward_equivalent, load_network, read_network
from .powerflow import solve_power_flow
from .shortcircuit import short_circuit

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "GridError",
    "IdentificationError",
    "InitializationError",
    "Network",
    "NumericalError",
    "PowerFlowError",
    "RecordError",
    "ShortCircuitError",
    "SimulationError",
    "ValidationError",
    "WardEquivalentParams",
    "apply_ward_equivalent",
    "load_network",
    "read_network",
    "short_circuit",
    "solve_power_flow",
]
