"""Shared exception types for the noma_ec package."""


class DomainError(ValueError):
    """An argument is outside the mathematical domain of an operation."""


class ConvergenceError(RuntimeError):
    """A quadrature or series evaluation failed to reach its tolerance."""


class NoCrossingError(RuntimeError):
    """A bracketing search found no sign change in the given interval."""
