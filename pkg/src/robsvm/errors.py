"""Exception hierarchy shared by every module."""


class RobSVMError(Exception):
    """Base class for all library errors."""


class DataError(RobSVMError, ValueError):
    """Input data could not be ingested or is unusable for the request."""


class MalformedCell(DataError):
    pass


class EmptyDataset(DataError):
    pass


class NonMonotoneIndex(DataError):
    pass


class SolverError(RobSVMError, RuntimeError):
    """A quadratic program did not reach an optimal status."""

    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution


class VerticalBoundary(RobSVMError, ValueError):
    """The fitted linear boundary has no finite slope in the (x1, x2) plane."""


class UndefinedDisparity(RobSVMError, ValueError):
    """Demographic disparity needs both outcome classes to be present."""
