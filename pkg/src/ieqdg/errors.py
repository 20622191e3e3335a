"""Exception types shared across the package."""


class IEQDGError(Exception):
    """Base class for all package errors."""


class ConfigurationError(IEQDGError, ValueError):
    """Invalid mesh, discretization or run configuration."""


class DomainError(IEQDGError, ValueError):
    """A point or value lies outside the domain where a function is defined."""


class AssemblyError(IEQDGError, ArithmeticError):
    """A form could not be assembled, e.g. a nonpositive weight was supplied."""


class SolverError(IEQDGError, RuntimeError):
    """The coupled linear solve failed or did not meet its residual contract."""


class UsageError(IEQDGError, RuntimeError):
    """An operation was called in a state that does not support it."""
