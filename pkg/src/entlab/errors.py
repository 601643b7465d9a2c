"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConvergenceError(ArithmeticError):
    """An iterative numerical method failed to meet its tolerance.

    ``diagnostics`` carries whatever the failing routine knew at the time
    (iteration counts, last residual, ...).
    """

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class QuadratureWarning(RuntimeWarning):
    """A quadrature estimate did not settle under node doubling."""
