"""Exception and warning types shared across the package."""

from __future__ import annotations


class SkewTailError(Exception):
    """Base class for all package errors."""


class DomainError(SkewTailError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class NumericalError(SkewTailError, ArithmeticError):
    """A numerical procedure failed to deliver a trustworthy result."""


class ToleranceNotReached(NumericalError):
    """Adaptive quadrature exhausted its depth budget.

    The best available estimate is kept on ``result`` so callers can decide
    whether it is good enough.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class BracketError(NumericalError):
    """Root finder was given an interval without a sign change."""


class DegenerateFitError(NumericalError):
    """Line fit cannot be formed from the supplied points."""


class SamplerError(NumericalError):
    """Rejection sampler exceeded its iteration cap."""


class UnreliableEstimateWarning(UserWarning):
    """Empirical estimate is based on too few tail observations."""
