"""Exception and warning types raised by the toolkit."""


class FloqcertError(Exception):
    """Base class for toolkit errors."""


class SingularSystem(FloqcertError):
    """The collocation matrix is numerically singular."""


class NonConverged(FloqcertError):
    """An iterative quadrature did not reach its tolerance."""


class Diverged(FloqcertError):
    """The bootstrap iteration for a fundamental-solution bound blew up."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history or [])


class EigFailure(FloqcertError):
    """The dense eigensolver failed."""


class SingularGamma(FloqcertError):
    """The eigenvector coefficient matrix is numerically singular."""


class NotDiagonalizable(FloqcertError):
    """The eigenvector matrix is too ill-conditioned to trust a diagonalization."""


class Unverifiable(FloqcertError):
    """The certified radius is too large to draw a stability conclusion.

    The partially filled certification is attached as ``certification``.
    """

    def __init__(self, message, certification=None):
        super().__init__(message)
        self.certification = certification


class NonResolvedWarning(UserWarning):
    """Chebyshev coefficients did not decay before the maximum degree."""
