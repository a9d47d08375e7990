"""Exception hierarchy shared across the toolkit.

The CLI maps these onto its documented exit codes, so new failure modes
should subclass one of the four base categories below.
"""


class SatlError(Exception):
    """Base class for all toolkit errors."""


class ConfigurationError(SatlError):
    """Bad model parameters, config files or job options (exit code 1)."""


class NumericalError(SatlError):
    """A solver failed or produced an unusable result (exit code 2)."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class DegenerateSteadyStateError(NumericalError):
    """The generator kernel is not one-dimensional; no unique steady state."""


class ZeroSignalError(NumericalError):
    """Field correlation vanishes identically; spectrum cannot be normalized."""


class TruncationFailureError(SatlError):
    """Adaptive photon truncation hit its ceiling (exit code 3)."""

    def __init__(self, message, n_max=None, top_population=None):
        super().__init__(message)
        self.n_max = n_max
        self.top_population = top_population


class FitError(SatlError):
    """Lorentzian fit failed or its preconditions were violated (exit code 4)."""


class DoubletDetectedError(FitError):
    """The spectrum is multi-peaked; a single-line fit is not defined."""

    def __init__(self, message, peaks=None):
        super().__init__(message)
        self.peaks = peaks


class UnsupportedSchemeError(SatlError):
    """Operation has no implementation for the requested pump scheme."""


class PreconditionError(SatlError):
    """A validation harness was called outside its regime of validity."""
