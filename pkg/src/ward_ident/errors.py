"""Exception hierarchy.

Validation problems (bad input documents, bad configs) derive from
``ValidationError``; numerical failures (divergence, singular systems) derive
from ``NumericalError``. The CLI maps the two families to distinct exit codes.
"""

from __future__ import annotations


class WardIdentError(Exception):
    """Base class for all package errors."""


class ValidationError(WardIdentError):
    """Input data or configuration violates a contract."""

    def __init__(self, message: str, element: str | None = None) -> None:
        self.element = element
        if element is not None and element not in message:
            message = f"{message} (element {element!r})"
        super().__init__(message)


class GridError(ValidationError):
    """Grid description is malformed or inconsistent."""


class RecordError(ValidationError):
    """PMU record file is malformed."""

    def __init__(self, message: str, line: int | None = None) -> None:
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConfigError(ValidationError):
    """Stage, objective or optimizer configuration is invalid."""


class NumericalError(WardIdentError):
    """A numerical procedure failed."""


class PowerFlowError(NumericalError):
    """Power flow could not be solved (singular Jacobian, divergence)."""


class ShortCircuitError(NumericalError):
    """Thevenin impedance at the fault bus is zero or undefined."""


class InitializationError(NumericalError):
    """Dynamic initialization found a machine outside its control limits."""

    def __init__(self, message: str, machine: str) -> None:
        self.machine = machine
        super().__init__(f"machine {machine!r}: {message}")


class SimulationError(NumericalError):
    """Time-domain integration blew up or the network equations failed."""


class IdentificationError(NumericalError):
    """Identification stage could not produce a usable result."""
