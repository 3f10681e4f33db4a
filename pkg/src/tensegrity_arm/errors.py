"""Exception types raised by the analysis routines."""


class TensegrityError(Exception):
    """Base class for all package errors."""


class DomainError(TensegrityError, ValueError):
    """Input lies outside the geometric domain of a formula."""


class SingularConfigurationError(TensegrityError, ArithmeticError):
    """A closed form or matrix is singular at the requested configuration."""


class QuasiBucklingError(SingularConfigurationError):
    """The effective joint stiffness (K_theta - K_g) lost invertibility."""


class ConvergenceError(TensegrityError, RuntimeError):
    """An iterative solver stopped without meeting its tolerance."""

    def __init__(self, message, residual=float("nan"), trace=None):
        super().__init__(message)
        self.residual = residual
        self.trace = list(trace or [])


class InfeasibleError(TensegrityError, ValueError):
    """Requested pose or start state cannot be realised by the chain."""
