"""Exceptions and warnings raised by mellinbranch.

Two families matter to callers: :class:`ValidationError` means the inputs
break a precondition and nothing was computed, :class:`NumericalError` means
the computation started and could not reach the requested accuracy.
"""


class MellinBranchError(Exception):
    """Base class of every error raised by the package."""


class ValidationError(MellinBranchError, ValueError):
    """Inputs violate the preconditions of an operation."""


class PoleError(ValidationError):
    """Evaluation hit a pole of a Gamma-type factor."""


class DomainError(ValidationError):
    """Argument lies on (or too close to) a set where the formula is singular."""


class StripError(ValidationError):
    """Re(s) lies outside a fundamental strip."""


class BranchError(ValidationError):
    """A contour touches or crosses the principal branch cut."""


class SingularityError(ValidationError):
    """An endpoint singularity is not integrable."""


class RangeError(ValidationError):
    """Argument outside the range where a bridge formula holds."""


class BudgetError(ValidationError):
    """A simulation request exceeds its work budget."""


class NumericalError(MellinBranchError):
    """The computation ran but failed to produce a trustworthy value."""


class ConvergenceError(NumericalError):
    """An iterative or limiting procedure did not converge."""


class SeriesOverflowError(ConvergenceError):
    """A power series overflowed or lost too many digits to cancellation."""


class DivergenceError(ConvergenceError):
    """Successive extrapolation values move apart instead of settling."""


class NoRootError(NumericalError):
    """No sign change of the target function in the given bracket."""


class RecoveryError(NumericalError):
    """A contour-ratio denominator is numerically zero."""


class NonIntegrableError(NumericalError):
    """An integral that must be finite came out infinite or undefined."""


class PopulationExplosionError(NumericalError):
    """A simulated population outgrew its guard."""


class QuadratureWarning(UserWarning):
    """A truncated integral has a tail that is not negligible."""


class ConvergenceWarning(UserWarning):
    """A result is returned but converged slowly; treat it with care."""
