"""Exception types raised across the toolkit."""


class SwfkitError(Exception):
    """Base class for all toolkit errors."""


class ConfigurationError(SwfkitError, ValueError):
    """Unknown layout, order/layout mismatch, rate mismatch and similar."""


class BoundsError(SwfkitError, IndexError):
    """A level or order argument outside its allowed range."""


class ShapeError(SwfkitError, ValueError):
    """Array dimensions do not match what an operation expects."""


class IngestionError(SwfkitError):
    """An HRIR manifest or one of its WAV files could not be loaded."""


class MetricError(SwfkitError, ValueError):
    """A metric is undefined for the given input (e.g. a silent ear)."""


class NormalizationError(SwfkitError, ValueError):
    """Peak normalisation of a silent signal."""


class UndefinedVectorError(SwfkitError, ValueError):
    """Velocity/energy vectors requested for an all-zero gain vector."""
