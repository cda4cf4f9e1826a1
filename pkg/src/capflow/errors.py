"""Exception hierarchy shared across the package.

The CLI maps these onto its exit-code contract: ConfigError -> 2,
BudgetError -> 3, verdict failures -> 4, HypothesisError -> 5.
"""


class CapflowError(Exception):
    """Base class for all package errors."""


class MeshError(CapflowError):
    """Invalid or degenerate mesh data."""


class RegionError(CapflowError):
    """A region descriptor cuts through mesh facets instead of aligning
    with them; fitted meshing requires exact resolution."""


class BudgetError(CapflowError):
    """A resource budget (element count, iteration cap) was exceeded."""

    def __init__(self, message: str, budget: str = "cells"):
        super().__init__(message)
        self.budget = budget


class SolveError(CapflowError):
    """Iterative solver failed to reach the requested tolerance."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class BoundViolationError(CapflowError):
    """A capacitary potential violated the maximum-principle bounds
    beyond the mesh-class tolerance."""


class HypothesisError(CapflowError):
    """A run hit data outside a theorem's hypotheses (non-simple
    eigenvalue, failed vanishing-order fit, zero limit capacity)."""


class ConfigError(CapflowError):
    """Malformed configuration file or invalid CLI arguments."""
