class HankelSpectraError(Exception):
    """Base class for numerical failures raised by the library."""


class DivergentIntegralError(HankelSpectraError, ArithmeticError):
    """An integral against a measure is +inf or did not converge within budget."""


class ConditioningError(HankelSpectraError):
    """Input too close to degenerate for the accurate factorization."""


class DegenerateSpectrumError(HankelSpectraError):
    """Computed spectrum has a tie at working precision."""


class ConvergenceError(HankelSpectraError):
    """An iteration hit its guard before converging."""


class StructuralError(HankelSpectraError):
    """Two measures that must have matching atoms do not."""


class EmptyMeasureError(HankelSpectraError, ValueError):
    """Every atom was dropped."""
