"""Exception hierarchy shared across the package."""


class TeFlowError(Exception):
    """Base class for all errors raised by this package."""


class DataQualityError(TeFlowError, ValueError):
    """Input data is malformed: non-finite values, unparseable cells, bad shapes."""


class InsufficientSamplesError(DataQualityError):
    """Too few samples for the requested estimation."""


class DegenerateSeriesError(DataQualityError):
    """A series has zero variance over the span needed for estimation.

    Attributes
    ----------
    series : str
        Which input failed, e.g. ``"source"`` or ``"target"``.
    """

    def __init__(self, series, message=None):
        self.series = series
        super().__init__(message or f"{series} series is constant over the estimation span")


class EmptyAnalysisError(DataQualityError):
    """Nothing to analyze, e.g. fewer samples than one window."""


class ConfigError(TeFlowError, ValueError):
    """Configuration values are invalid or mutually inconsistent."""
