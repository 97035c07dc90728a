"""Exception types for Invariant OSC.

Errors about invalid values also subclass ValueError so callers that guard
op inputs with ``except ValueError`` keep working.
"""

from typing import Any


class OscError(Exception):
    """Base class for all Invariant OSC errors."""


class ConfigError(OscError, ValueError):
    """Invalid or unknown configuration value."""


class NonFiniteError(OscError, ValueError):
    """A torque, model output or parameter is NaN or infinite."""


class NonFiniteLossError(NonFiniteError):
    """Dynamics loss evaluated to a non-finite value on some batch row."""

    def __init__(self, message: str, row: int, values: dict[str, Any]) -> None:
        super().__init__(message)
        self.row = row
        self.values = values


class NonFiniteGradientError(NonFiniteError):
    """A parameter gradient contains NaN or infinite entries."""

    def __init__(self, message: str, parameter: str) -> None:
        super().__init__(message)
        self.parameter = parameter


class DivergenceError(OscError):
    """Training loss exceeded the divergence threshold."""


class CheckpointError(OscError):
    """Checkpoint missing, unreadable, or incompatible."""


class GradientCheckError(OscError):
    """Analytical gradients disagree with finite differences."""
