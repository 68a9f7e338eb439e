"""Exception hierarchy shared by every module."""

from __future__ import annotations


class ParisianError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(ParisianError, ValueError):
    """An input violates a documented invariant or precondition."""


class ConfigError(ParisianError, ValueError):
    """A numerical or simulation configuration is invalid."""


class RangeError(ParisianError, ArithmeticError):
    """A special function left its representable range (overflow)."""


class NumericalError(ParisianError, ArithmeticError):
    """A numerical routine failed to reach its target.

    ``estimate`` carries the best value obtained and ``achieved`` the
    error level actually reached, when known.
    """

    def __init__(self, message: str, estimate=None, achieved: float | None = None):
        super().__init__(message)
        self.estimate = estimate
        self.achieved = achieved
