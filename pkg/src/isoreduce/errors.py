"""Exception hierarchy.

Domain errors are raised when an input lies outside the theory (non-structural
set, spectral parameter inside the excluded set, invalid chain parameters).
Numerical errors signal that an algorithm failed on a valid input.
"""


class IsoreduceError(Exception):
    pass


class InputParseError(IsoreduceError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class GraphParseError(InputParseError):
    pass


class ParamsParseError(InputParseError):
    pass


class DomainError(IsoreduceError, ValueError):
    pass


class NotStructuralError(DomainError):
    def __init__(self, message, witness=None):
        self.witness = witness
        super().__init__(message)


class SigmaError(DomainError):
    """The spectral parameter coincides with an excluded diagonal value."""

    def __init__(self, lam, sigma):
        self.lam = lam
        self.sigma = sigma
        super().__init__(f"lambda={lam} lies in the excluded set (sigma={sigma})")


class InvalidParamsError(DomainError):
    def __init__(self, condition, message):
        self.condition = condition
        super().__init__(f"{condition}: {message}")


class NotAnEigenvalueError(DomainError):
    pass


class WindowTooSmallError(DomainError):
    """A declared tail bound exceeds the requested tolerance."""


class NumericalError(IsoreduceError, RuntimeError):
    pass


class EigenSolverError(NumericalError):
    pass


class ConvergenceError(NumericalError):
    pass


class BudgetExceededError(NumericalError):
    pass
