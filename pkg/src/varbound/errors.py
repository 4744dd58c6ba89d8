"""Exception types raised across the package."""


class VarBoundError(Exception):
    """Base class for all package-specific errors."""


class NotSquare(VarBoundError, ValueError):
    """Matrix input is not square."""


class NotHermitian(VarBoundError, ValueError):
    """Matrix asymmetry exceeds the hermiticity tolerance."""


class InvalidSpin(VarBoundError, ValueError):
    """Spin quantum number is not a nonnegative half-integer."""


class InvalidPovm(VarBoundError, ValueError):
    """POVM effects are not positive semidefinite or do not sum to identity."""


class AlphaOutOfRange(VarBoundError, ValueError):
    """Depolarizing strength lies outside [0, 1]."""


class ThetaOutOfRange(VarBoundError, ValueError):
    """Weight angle lies outside the open interval (0, pi/2)."""


class DimensionMismatch(VarBoundError, ValueError):
    """Operators or states of incompatible dimensions were combined."""


class NotNormalized(VarBoundError, ValueError):
    """State vector norm differs from 1 beyond tolerance."""


class ConvergenceFailure(VarBoundError, RuntimeError):
    """Iterative eigensolver did not reach the requested residual."""


class NumericalFailure(VarBoundError, RuntimeError):
    """A numerical consistency check failed beyond tolerance."""


class EmptyBox(VarBoundError, ValueError):
    """Box bounds are degenerate or inverted."""


class EmptyPolytope(VarBoundError, RuntimeError):
    """A cut removed every vertex, leaving no feasible region."""


class ProblemFileError(VarBoundError, ValueError):
    """Problem file could not be parsed; message carries line and field."""


class CertificateError(VarBoundError, RuntimeError):
    """Stored certificate disagrees with a fresh eigenvalue recomputation."""
