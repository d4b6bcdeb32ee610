"""Exception hierarchy shared by all pipeline stages."""


class H2BError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(H2BError, ValueError):
    """An argument is outside its documented domain."""


class ConfigurationError(ParameterError):
    """A sensor or pipeline configuration cannot be realized."""


class ExtractionError(H2BError):
    """Not enough heartbeats could be located in a trace."""


class AlignmentError(H2BError):
    """Two IPI sequences share no pairable beats."""


class EstimationError(H2BError):
    """Too few samples to estimate a statistic."""


class DegenerateModelError(H2BError):
    """The calibration sample has no spread to quantize."""


class SolverError(H2BError):
    """The sparse solver did not converge.

    ``residual`` holds the constraint violation of the last iterate and
    ``iterate`` the iterate itself, when available.
    """

    def __init__(self, message, residual, iterate=None):
        super().__init__(message)
        self.residual = residual
        self.iterate = iterate


class ReconciliationError(H2BError):
    """Mismatch correction failed (decoder or solver gave up)."""


class InconsistentSketchError(ReconciliationError):
    """The sketch difference cannot arise from any pair of genuine keys."""


class ProtocolError(H2BError):
    """Messages do not fit the session they were delivered to."""


class ParseError(ProtocolError):
    """A wire message is malformed."""


class StateError(ProtocolError):
    """An operation was invoked in the wrong session state."""


class TransportTimeout(ProtocolError):
    """No message arrived on the channel before the deadline."""
