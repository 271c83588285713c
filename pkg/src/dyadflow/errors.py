"""Exception types shared across the package."""


class DyadflowError(Exception):
    """Base class for all package errors."""


class DomainError(DyadflowError):
    """Invalid value for an operation (bad coordinates, nonpositive variance, ...)."""


class NumericalError(DyadflowError):
    """A numerical procedure failed (factorization, underflow of all posterior masses)."""
