"""Exception types raised across the package.

Everything derives from CadError so callers can catch the whole family;
the CLI maps shape-like errors to exit code 3 and input-like errors to 2.
"""


class CadError(Exception):
    """Base class for all package errors."""


class InvalidInputError(CadError):
    """Non-finite values, unfilled state, or otherwise malformed input."""


class ClassCountError(CadError):
    """Fewer than two class channels where a class axis is required."""


class NotADistributionError(CadError):
    """Values that should be a probability distribution are not."""


class GridMismatchError(CadError):
    """Image dimensions incompatible with the patch grid."""


class ShapeError(CadError):
    """Tensor shapes disagree with each other or the operation."""


class BoundsError(CadError):
    """Patch coordinates fall outside the grid."""


class ThresholdError(CadError):
    """Invalid confidence or region-size threshold."""


class IterationError(CadError):
    """Negative or otherwise invalid training iteration index."""


class EmptyRegionError(CadError):
    """Operation requires a non-empty region."""


class NoPlacementError(CadError):
    """No candidate placement available."""


class UndefinedMetricError(CadError):
    """Metric undefined for the given masks (e.g. empty surface)."""


class ConfigError(CadError):
    """Invalid harness or schedule configuration."""


class DivergenceError(CadError):
    """Training produced a non-finite loss."""


class TensorFileError(CadError):
    """Malformed tensor container file."""
