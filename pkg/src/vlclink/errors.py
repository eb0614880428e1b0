"""Exception types raised across the package."""


class VLCError(Exception):
    """Base class for all package errors."""


class DomainError(VLCError, ValueError):
    """An input lies outside the domain where the model is defined."""


class ExtrapolationError(DomainError):
    """A tabulated pattern was queried outside its sampled grid."""


class CalibrationError(VLCError):
    """A pattern is uncalibrated or cannot be calibrated at the reference."""


class ConfigError(VLCError):
    """Invalid run configuration, unknown lens label or preset."""


class ParseError(VLCError):
    """Malformed measurement CSV."""


class FitError(VLCError):
    """The optimizer failed to converge.

    ``last`` holds the last accepted parameter vector (natural units).
    """

    def __init__(self, message, last=None):
        super().__init__(message)
        self.last = last


class RankDeficiencyError(FitError):
    """The data cannot constrain all free parameters."""
