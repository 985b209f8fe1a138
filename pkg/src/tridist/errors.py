"""Exception types shared across the package."""


class ParameterError(ValueError):
    """An argument violates a documented precondition."""


class DegreeMismatchError(ArithmeticError):
    """Interpolation residual exceeded tolerance, so the assumed degree was wrong."""


class OutOfDomainError(ValueError):
    """Recovered inner products do not form an ordered triple inside [-1, 1)."""


class ConsistencyError(ArithmeticError):
    """Two independent computations of the same quantity disagree."""


class CertificationFailed(RuntimeError):
    """The interval SDP did not produce a usable certificate."""
