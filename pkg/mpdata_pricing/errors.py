"""Exception hierarchy shared by the solver, the pricing layer and the CLI.

Each error carries the process exit code the CLI maps it to.
"""
from __future__ import annotations


class PricingError(Exception):
    exit_code: int = 1


class ConfigurationError(PricingError, ValueError):
    """Invalid user input: parameters, grid sizing requests or config files."""

    exit_code = 2


class StabilityError(PricingError):
    """Courant-number or lambda-squared bound violated."""

    exit_code = 3


class NumericalError(PricingError):
    """Non-finite values or inconsistent array shapes inside the solver."""

    exit_code = 4


class GridMismatchError(NumericalError, ValueError):
    pass


class InsufficientDataError(PricingError, ValueError):
    """Too few convergence points to fit an order of accuracy."""

    exit_code = 4
