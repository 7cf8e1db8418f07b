"""Exception types raised across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class PreconditionError(ValueError):
    """A hypothesis required by a check does not hold.

    ``hypothesis`` names the failing condition (e.g. ``"symmetry"``).
    """

    def __init__(self, message: str, hypothesis: str):
        super().__init__(message)
        self.hypothesis = hypothesis


class NumericalError(ArithmeticError):
    """A numerical routine failed to reach its tolerance."""

    def __init__(self, message: str, achieved_tol: float | None = None, diagnostics=None):
        super().__init__(message)
        self.achieved_tol = achieved_tol
        self.diagnostics = diagnostics
