"""Exception types raised by the trackvib processing chain.

Plain invalid arguments (bad factor, cutoff above Nyquist, mismatched
rates...) raise the builtin ValueError. The classes below mark data-dependent
failures a caller may want to catch and handle individually; they all derive
from TrackVibError so the CLI can map any of them to a data-error exit.
"""


class TrackVibError(Exception):
    """Base class for data-dependent processing failures."""


class GapTooLargeError(TrackVibError):
    """A gap between record blocks exceeds the bridgeable size."""


class TooShortError(TrackVibError):
    """Input series is too short for the requested operation."""


class NoValidSpeedError(TrackVibError):
    """No valid speed sample could be derived from the delay estimates."""


class AlignmentFailedError(TrackVibError):
    """Speed-profile alignment found no acceptable correlation peak."""


class InsufficientDataError(TrackVibError):
    """Fewer valid window pairs than required for a comparison."""


class UndefinedCorrelationError(TrackVibError):
    """Correlation undefined (zero variance on one side)."""


class NoOverlapError(TrackVibError):
    """Window sequences share no overlapping span."""


class PlanTooShortError(TrackVibError):
    """Speed plan ends before the simulated run covers the profile."""


class MissingChannelError(TrackVibError):
    """A channel required by the processing stage is absent."""


class FormatError(TrackVibError):
    """A file does not conform to its declared format."""
