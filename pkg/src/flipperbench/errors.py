"""Exception types shared across the package."""


class FlipperBenchError(Exception):
    """Base class for all package errors."""


class BoundsError(FlipperBenchError):
    """Query or footprint outside the heightmap."""


class ArgumentError(FlipperBenchError):
    """Invalid argument value."""


class ValidationError(FlipperBenchError):
    """Data violates a schema or invariant."""


class ConfigError(FlipperBenchError):
    """Bad or missing configuration."""


class ParseError(FlipperBenchError):
    """Malformed input file."""


class SettleError(FlipperBenchError):
    """Pose settling failed to converge."""


class ScoringError(FlipperBenchError):
    """Metrics pipeline cannot score the given data."""


class CalibrationError(FlipperBenchError):
    """Calibration inputs do not cover the arena."""


class AlignmentError(FlipperBenchError):
    """External streams share no time overlap."""
