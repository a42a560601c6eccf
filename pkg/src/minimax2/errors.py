"""Exception types shared across the solver library."""


class SolverError(Exception):
    """Base class for all library-specific errors."""


class DimensionMismatch(SolverError):
    """Vector or matrix arguments have inconsistent shapes."""


class SingularYYBlock(SolverError):
    """The yy Hessian block could not be factorized; strong concavity
    is violated (or numerically broken) at the queried point."""


class NonFiniteIterate(SolverError):
    """An oracle returned NaN/Inf during an iteration."""


class InvalidAccuracy(SolverError):
    """A requested accuracy or tolerance is non-positive."""


class NumericalBreakdown(SolverError):
    """A root find or factorization failed beyond recovery."""


class ConvergenceFailure(SolverError):
    """An iterative eigensolver failed to converge."""


class SingularLMSystem(SolverError):
    """The shifted Levenberg-Marquardt system is not positive definite."""


class OutsideDomain(SolverError):
    """A point lies outside the domain on which the problem is defined."""


class NotPositiveDefinite(SolverError):
    """A matrix required to be positive definite is not."""


class ConfigError(SolverError):
    """An experiment configuration file is malformed or inconsistent."""


class ParseError(SolverError):
    """A trace file could not be parsed."""
