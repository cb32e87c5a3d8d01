"""Exception hierarchy.

Every error raised on bad data derives from :class:`GpsFuseError`, which the
command line front-end maps to exit status 1.
"""


class GpsFuseError(Exception):
    """Base class for data errors."""


class EmptyTrack(GpsFuseError):
    pass


class EmptyInput(GpsFuseError):
    pass


class FrameRangeExceeded(GpsFuseError):
    pass


class DegenerateBearing(GpsFuseError):
    pass


class FormatError(GpsFuseError):
    pass


class RowError(GpsFuseError):
    """A rejected input row. Collected as a diagnostic rather than raised."""

    def __init__(self, row: int, field: str, reason: str):
        super().__init__(f"row={row} field={field} reason={reason}")
        self.row = row
        self.field = field
        self.reason = reason

    def __eq__(self, other):
        if not isinstance(other, RowError):
            return NotImplemented
        return (self.row, self.field, self.reason) == (other.row, other.field, other.reason)

    def __hash__(self):
        return hash((self.row, self.field, self.reason))


class NoOverlap(GpsFuseError):
    pass


class FlightMismatch(GpsFuseError):
    pass


class InsufficientData(GpsFuseError):
    pass


class NoGeotags(GpsFuseError):
    pass


class UnsupportedDate(GpsFuseError):
    pass


class UnknownCamera(GpsFuseError):
    pass


class ConfigError(GpsFuseError):
    pass
