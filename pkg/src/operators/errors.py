"""Exception hierarchy for oscsym.

Library code raises these; processors catch ``OscsymError`` per experiment
and record the failure without aborting sibling experiments.
"""


class OscsymError(Exception):
    """Base class for every error raised by the numerical core."""


class DomainError(OscsymError, ValueError):
    """A parameter lies outside its admissible range."""


class UnsupportedOrderError(OscsymError):
    """A derivative oracle was asked for an order it cannot supply."""


class PreconditionError(OscsymError):
    """A hypothesis of the construction fails on a probe point."""


class DivergenceError(OscsymError):
    """A fixed-point iteration stopped contracting."""

    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = list(trace or [])


class SingularityError(OscsymError):
    """A matrix that must be invertible is (numerically) singular."""


class ConditioningError(OscsymError):
    """A quantity used as a divisor is too close to zero."""


class AliasingError(OscsymError):
    """Requested frequencies are not representable on the grid."""


class RangeError(OscsymError):
    """A search or size bound was exceeded."""


class ResolutionError(OscsymError):
    """A feature is narrower than the grid can resolve."""


class ChartError(OscsymError):
    """A point lies outside the coordinate chart."""


class SpectrumProbeError(OscsymError):
    """A singular value computation failed."""


class ConfigError(OscsymError):
    """An experiment config could not be parsed or validated."""


class ReportFormatError(OscsymError):
    """A report CSV does not follow the header/column layout."""
