"""Exception types shared across the package.

The CLI maps PreconditionError to exit code 3 and NumericalError to exit code 4.
"""


class PreconditionError(ValueError):
    """An input violates a documented precondition."""


class DimensionTooSmall(PreconditionError):
    pass


class TargetNotFixed(PreconditionError):
    pass


class NotHomogeneous(PreconditionError):
    pass


class NumericalError(ArithmeticError):
    """A numerical self-check failed or an iteration did not converge."""


class NoConvergence(NumericalError):
    pass
