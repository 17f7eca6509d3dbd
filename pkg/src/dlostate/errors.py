"""Exception hierarchy shared across the package.

Every error raised intentionally by library code derives from DloStateError so
callers (and the CLI) can map failures to coarse categories without matching on
message text.
"""

from __future__ import annotations


class DloStateError(Exception):
    """Base class for all package errors."""


class ConfigError(DloStateError):
    """A configuration value is missing, malformed, or out of range."""


class DataError(DloStateError):
    """A dataset, record file, or checkpoint is missing or malformed."""


class NumericError(DloStateError):
    """A numeric computation produced an unusable result."""


class OverstretchError(ConfigError):
    """Requested grasp separation exceeds what the rope length allows."""


class EmptyObservationError(DataError):
    """Rendering or occlusion left no observable DLO pixels."""


class DegenerateVoteError(NumericError):
    """Vote aggregation was invoked with an impossible candidate set."""


class FitError(NumericError):
    """Curve fitting has too few distinct control points to proceed."""


class NonFiniteLossError(NumericError):
    """A training loss evaluated to NaN or infinity."""


class ShapeError(DataError):
    """An array argument has an incompatible shape."""
