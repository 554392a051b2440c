"""Exception hierarchy for domain failures.

Every error raised by the toolkit derives from ZStackError so callers (CLI,
service) can map domain failures to a single exit code / HTTP status.
"""

from __future__ import annotations


class ZStackError(Exception):
    """Base class for all domain errors."""


class StackLoadError(ZStackError):
    """A stack directory is missing or contains no readable frames."""


class DimensionMismatchError(StackLoadError):
    """Frames in a stack do not share one resolution."""


class FrameRangeError(ZStackError):
    """Pixel data is not a finite 2-D array with intensities in [0, 1]."""


class NoPeakError(ZStackError):
    """A focal curve is flat or carries no local maximum."""


class InvalidPeakError(ZStackError):
    """A peak is inconsistent with the curve it is mapped against."""


class EmptyCoverageError(ZStackError):
    """Coverage selection produced no frames."""


class ConfigError(ZStackError):
    """A configuration value or file is invalid."""
