"""Exception types shared across the package."""

__all__ = [
    "VgInfoError",
    "DomainError",
    "StateError",
    "SimulationError",
    "IntegrabilityError",
    "PosteriorUnderflowError",
    "ConfigError",
]


class VgInfoError(Exception):
    """Base class for all package-specific errors."""


class DomainError(VgInfoError, ValueError):
    """An argument lies outside the mathematical domain of a function."""


class StateError(VgInfoError, ValueError):
    """A market state violates the preconditions of a pricing formula."""


class SimulationError(VgInfoError, RuntimeError):
    """A simulated path is unusable (e.g. degenerate subordinator)."""


class IntegrabilityError(VgInfoError, ValueError):
    """A payoff/prior combination has a divergent pricing integral."""


class PosteriorUnderflowError(VgInfoError, ArithmeticError):
    """All posterior mass underflowed to zero; carries the max log-kernel."""

    def __init__(self, message: str, max_log_kernel: float):
        super().__init__(f"{message} (max log-kernel: {max_log_kernel!r})")
        self.max_log_kernel = max_log_kernel


class ConfigError(VgInfoError, ValueError):
    """A scenario configuration failed validation.

    ``field`` identifies the offending entry with dotted-path notation,
    e.g. ``model.sigma``.
    """

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
