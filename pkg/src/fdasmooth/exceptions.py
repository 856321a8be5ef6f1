"""Exception hierarchy shared by every module of the package."""


class FDAError(Exception):
    """Base class for all errors raised by fdasmooth."""

    def to_record(self):
        """Machine-readable description used by the command line tool."""
        record = {"error": type(self).__name__, "message": str(self)}
        location = getattr(self, "location", None)
        if location is not None:
            record["location"] = location
        return record


class MalformedRow(FDAError, ValueError):
    pass


class EmptyFile(FDAError, ValueError):
    pass


class TimeOutOfDomain(FDAError, ValueError):
    pass


class InvalidGridSize(FDAError, ValueError):
    pass


class NonpositiveBandwidth(FDAError, ValueError):
    pass


class GridMismatch(FDAError, ValueError):
    pass


class LengthMismatch(FDAError, ValueError):
    pass


class DegenerateWindow(FDAError, ArithmeticError):
    """The local-linear normal equations are singular at an evaluation point.

    ``location`` holds the offending time (or ``(s, t)`` pair for surfaces).
    """

    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class DegenerateSurfaceWindow(DegenerateWindow):
    pass


class NoPairableCurves(FDAError, ValueError):
    pass


class AsymmetricInput(FDAError, ValueError):
    pass


class NoPositiveEigenvalues(FDAError, ArithmeticError):
    pass


class TooManyComponents(FDAError, ValueError):
    pass


class UnknownCombination(FDAError, ValueError):
    pass
