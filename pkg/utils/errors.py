"""Exception types raised by the workbench."""

from typing import Any, Optional


class DomainError(ValueError):
    """A quantity is outside the domain where the model is defined."""


class SteadyStateError(DomainError):
    """No interior steady state exists for the requested operating point."""

    def __init__(self, tank: int, inflow: float):
        super().__init__(
            f"tank {tank} has non-positive steady inflow {inflow:g} cm3/s; "
            "no interior steady state"
        )
        self.tank = tank
        self.inflow = inflow


class IntegrationError(RuntimeError):
    """A fixed-step integration produced a non-finite state."""

    def __init__(self, step: int, message: str = ""):
        super().__init__(message or f"non-finite state at integration step {step}")
        self.step = step


class FilterDivergenceError(RuntimeError):
    """A Kalman filter produced a non-finite or singular quantity."""


class QPError(RuntimeError):
    """The box-constrained QP solver stopped before reaching optimality."""

    def __init__(self, message: str, last_iterate: Any = None, diagnostics: Any = None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.diagnostics = diagnostics


class EstimationError(RuntimeError):
    """Parameter estimation could not produce a finite objective."""


class UntunableError(ValueError):
    """A transfer function cannot be turned into PID gains."""


class ConfigError(ValueError):
    """A run configuration is incomplete or inconsistent."""


class ClosedLoopError(RuntimeError):
    """A component failed during a closed-loop run.

    The partial record up to the failing sample is kept on ``record``.
    """

    def __init__(self, message: str, record: Optional[Any] = None):
        super().__init__(message)
        self.record = record
