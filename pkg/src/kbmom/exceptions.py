class KbmomError(Exception):
    """Base class for errors raised by this package."""


class InvalidPlanError(KbmomError, ValueError):
    pass


class InfeasibleError(KbmomError, ValueError):
    pass


class DegenerateIterationError(KbmomError, RuntimeError):
    """Every block in a round had an empty cluster, even after resampling."""


class UndefinedMetricError(KbmomError, ValueError):
    pass


class CSVParseError(KbmomError, ValueError):
    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column
