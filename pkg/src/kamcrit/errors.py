"""Exception types raised by kamcrit."""


class KamcritError(Exception):
    """Base class for all kamcrit errors."""


class DomainError(KamcritError, ValueError):
    """Invalid argument or state (non-finite input, bad winding fraction, ...)."""


class UnsupportedParameterError(KamcritError, ValueError):
    """Parameter value outside the implemented range (e.g. alternate index != 1)."""


class ImplicitSolveError(KamcritError):
    """The implicit canonical step failed to converge."""

    def __init__(self, message, last_iterate=None, residual=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.residual = residual


class OrbitNotFoundError(KamcritError):
    """Symmetry-line search found no bracketable periodic orbit."""

    def __init__(self, message, scan_trace=None):
        super().__init__(message)
        self.scan_trace = scan_trace if scan_trace is not None else []


class RefinementError(KamcritError):
    """Newton polish of an orbit failed (singular Jacobian or divergence)."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = history if history is not None else []


class ContinuationError(KamcritError):
    """Continuation in K hit the minimum step size."""

    def __init__(self, message, last_good_k=None):
        super().__init__(message)
        self.last_good_k = last_good_k


class BracketingError(KamcritError):
    """A bisection precondition (sign change across the bracket) failed."""


class WidthMeasurementError(KamcritError):
    """Island-width measurement aborted because the orbit escaped the resonance."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics if diagnostics is not None else {}


class NoInteriorMinimumError(KamcritError):
    """No sampled distance curve has an interior minimum on the grid."""


class MergeConflictError(KamcritError):
    """Result merge found duplicate keys with differing values."""

    def __init__(self, message, conflicts=None):
        super().__init__(message)
        self.conflicts = conflicts if conflicts is not None else []


class ConfigError(KamcritError, ValueError):
    """Invalid scan configuration or config file syntax."""
