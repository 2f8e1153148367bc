"""Exception types raised by the package."""


class ParameterError(ValueError):
    """An argument lies outside its admissible range."""


class DegenerateInputError(ValueError):
    """The input carries no information for the requested operation (e.g. all-zero noise)."""


class UsageError(TypeError):
    """An operation was called with a rule it does not handle."""


class SelectionFailedError(RuntimeError):
    """No finite functional value was found on the grid."""


class SaturationError(ValueError):
    """Smoothness or exponent parameters exceed the range where a rate statement applies."""


class FitDegenerateError(RuntimeError):
    """Too few usable points for a log-log slope fit."""


class DegenerateWeightWarning(RuntimeWarning):
    """The GCV trace weight underflowed to zero."""
