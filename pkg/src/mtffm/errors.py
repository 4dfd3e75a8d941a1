"""Exception hierarchy shared by all mtffm modules."""


class MTFFMError(Exception):
    """Base class for all library errors."""


class DomainError(MTFFMError, ValueError):
    """An argument lies outside the domain where the quantity is defined."""


class ConvergenceDomainError(DomainError):
    """Design coefficients violate sum_k k|z_k| <= 1."""


class PreconditionError(MTFFMError, ValueError):
    """A documented precondition (sampling rate, grid size, ...) is not met."""


class NumericalError(MTFFMError, RuntimeError):
    """An iterative method failed to converge."""


class MetricUndefinedError(MTFFMError, ArithmeticError):
    """A metric cannot be evaluated for the given profile (no null, zero area)."""
