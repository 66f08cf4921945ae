"""Exception hierarchy.

Validation errors (bad inputs) and numerical errors (a computation that
started from valid inputs could not finish) are kept on separate branches so
the CLI can map them to distinct exit codes.
"""


class ErfbpError(Exception):
    """Base class for all package errors."""


class ValidationError(ErfbpError):
    """Invalid input: wrong masses, bad grid, out-of-range tolerance."""


class NumericalError(ErfbpError):
    """A numerical procedure failed to converge or lost its target."""


class MassOutOfRange(ValidationError):
    """A mass is below the positivity floor outside degenerate-limit mode."""


class DegenerateK(ValidationError):
    """|K| is below 1e-14 and strict orientation checking was requested."""


class CollisionSingularity(ValidationError):
    """Field evaluation requested within the collision tolerance of a primary."""


class NotStable(ValidationError):
    """Frequencies or resonance residuals requested at a non-stable point."""


class GridTooCoarse(NumericalError):
    """Equilibrium count still changes after the allowed grid refinements."""


class LabelAmbiguity(NumericalError):
    """Continuation lost a family and a point could not be labeled."""


class FamilyLost(NumericalError):
    """A labeled family folded before the requested mass point was reached."""


class OpenCurveWarning(UserWarning):
    """An extracted boundary curve did not close inside the scanned region."""
