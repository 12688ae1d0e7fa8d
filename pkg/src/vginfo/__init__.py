"""Simulation and pricing engine for variance-gamma information-based pricing.

The package simulates gamma subordinators, gamma bridges, normalized
variance-gamma bridges and the information processes built from them, and
prices payoffs on a single market factor by Bayesian conditioning on the
information process.  Analytic pricers cover binary bonds, recovery bonds,
log-normal (and power) payoffs and exponentially distributed payoffs; a
general quadrature engine handles arbitrary mixture priors.
"""

__version__ = "0.1.0"

from . import closed_form, path_sim, pricing_kernel, special_math, stats_validation
from .errors import (
    ConfigError,
    DomainError,
    IntegrabilityError,
    PosteriorUnderflowError,
    SimulationError,
    StateError,
    VgInfoError,
)

__all__ = [
    "closed_form",
    "path_sim",
    "pricing_kernel",
    "special_math",
    "stats_validation",
    "ConfigError",
    "DomainError",
    "IntegrabilityError",
    "PosteriorUnderflowError",
    "SimulationError",
    "StateError",
    "VgInfoError",
    "__version__",
]
