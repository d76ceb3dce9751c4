"""
Errors raised by adiabatic-diophantine.

Input problems are :class:`ValueError` subclasses so that callers can
keep catching ``ValueError`` as they would for any invalid argument.
"""
from typing import Optional


class PolynomialSyntaxError(ValueError):
    """The equation text does not follow the polynomial grammar."""

    def __init__(self, message: str, position: Optional[int] = None) -> None:
        self.position = position
        if position is not None:
            message = f"{message} at position {position}"
        super().__init__(message)


class DimensionMismatchError(ValueError):
    """Two objects disagree on the number of modes or the basis dimension."""


class NotHermitianError(ValueError):
    """An operator flagged Hermitian is not, or a Hermitian one was required."""


class GuardExceededError(ValueError):
    """A configured size guard refused the request."""


class SearchSpaceTooLargeError(GuardExceededError):
    """The brute-force box holds more points than allowed."""


class BasisTooLargeError(GuardExceededError):
    """The truncated Fock basis is larger than allowed."""


class PrecisionGuardError(GuardExceededError):
    """A problem Hamiltonian entry cannot be stored exactly as a float."""


class SolverGuardError(GuardExceededError):
    """The operator is too large for the dense eigensolver."""


class IntegrationError(RuntimeError):
    """The Schrodinger integration produced an unusable state."""


class ConvergenceError(RuntimeError):
    """The eigensolver did not converge."""


class WitnessError(AssertionError):
    """A reported solution failed exact substitution."""
