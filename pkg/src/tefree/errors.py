"""Exception types shared across the package."""


class TefreeError(Exception):
    """Base class for all errors raised by this package."""


# csbessel
class NonFinite(TefreeError, ValueError):
    """Raised when a Bessel argument is NaN or infinite."""


class BesselOverflow(TefreeError, OverflowError):
    """Raised when an unscaled Bessel value is not representable."""


# symbolcore
class BranchFailure(TefreeError, ValueError):
    """Raised when the root rho would be real (spectral parameter off the zones)."""


class ZoneMismatch(TefreeError, ValueError):
    """Raised when a bound is requested outside its zone of validity."""


class GridTooCoarse(TefreeError, RuntimeError):
    """Raised when a class norm changes by 10% or more under grid refinement."""


class ConditionViolated(TefreeError, ValueError):
    """Raised when a coefficient condition such as (1.2) fails.

    Attributes
    ----------
    condition : str
        Label of the violated condition, e.g. ``"(1.2)"``.
    """

    def __init__(self, condition, message=""):
        self.condition = condition
        text = f"condition {condition} violated"
        if message:
            text += f": {message}"
        super().__init__(text)


# parametrix
class DegenerateRho(TefreeError, ArithmeticError):
    """Raised when |rho| is numerically zero somewhere on the grid."""


# psido
class FrequencyOutOfRange(TefreeError, ValueError):
    """Raised when the discrete frequencies leave the symbol's xi-range."""


class NoConvergence(TefreeError, RuntimeError):
    """Raised when power iteration does not converge."""


# diskmodel
class DirichletPole(TefreeError, ArithmeticError):
    """Raised when z/h**2 is (numerically) a Dirichlet eigenvalue of the disk."""


# rootscan
class ContourThroughZero(TefreeError, RuntimeError):
    """Raised when a contour keeps hitting a zero after all retries."""


class PhaseJumpUnresolved(TefreeError, RuntimeError):
    """Raised when the phase along a contour side cannot be unwrapped."""


class NewtonDivergence(TefreeError, ArithmeticError):
    """Raised when Newton iteration leaves its cell or stalls."""


class SentinelNonzeroWinding(TefreeError, RuntimeError):
    """Raised when a mode above k_max still has zeros in the scan rectangle."""


# regions
class InsufficientData(TefreeError, ValueError):
    """Raised when an envelope fit has too few eigenvalues in its window."""


class IncompleteSpectrum(TefreeError, ValueError):
    """Raised when a counting function is requested beyond the scanned region."""
