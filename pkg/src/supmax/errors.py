"""Exception types shared across the package."""


class SupmaxError(Exception):
    """Base class for package errors."""


class InfeasibleSpecError(SupmaxError, ValueError):
    """Parameters that cannot define a valid process or construction."""


class NumericalError(SupmaxError, ArithmeticError):
    """A quadrature or root-finding routine failed to reach its tolerance.

    ``diagnostics`` carries whatever the routine knew when it gave up.
    """

    def __init__(self, message: str, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics

    def __str__(self) -> str:
        base = super().__str__()
        if not self.diagnostics:
            return base
        extra = ", ".join(f"{k}={v!r}" for k, v in self.diagnostics.items())
        return f"{base} ({extra})"
