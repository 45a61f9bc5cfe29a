"""Exception hierarchy.

Errors fall into three families that the command-line front end maps to exit
statuses: bad input data (2), degenerate analyses (3) and bad configuration
(1, treated as a usage error).
"""


class EdssMarkovError(Exception):
    """Base class for every error raised by this package."""


class DataError(EdssMarkovError, ValueError):
    """Input data violates a schema or domain constraint."""


class InvalidEdss(DataError):
    """Raw value is not a valid EDSS score."""


class NotHalfStep(InvalidEdss):
    pass


class InvalidHalf(InvalidEdss):
    pass


class OutOfRange(InvalidEdss):
    pass


class SchemaError(DataError):
    """CSV header or row layout is wrong."""


class DuplicateVisit(DataError):
    pass


class EmptyCohort(DataError):
    pass


class InsufficientSubjects(DataError):
    pass


class DimensionMismatch(DataError):
    pass


class EmptyInput(DataError):
    pass


class NonContiguousSpans(DataError):
    pass


class AnalysisError(EdssMarkovError):
    """The analysis is well-formed but has nothing meaningful to report."""


class NoTransitionsObserved(AnalysisError):
    pass


class NoConvergence(AnalysisError):
    pass


class MissingIntervalMatrix(AnalysisError):
    pass


class AllCellsExcluded(AnalysisError):
    pass


class EmptyRegressionSet(AnalysisError):
    pass


class EmptyTargetSet(AnalysisError):
    pass


class DegenerateExpected(AnalysisError):
    pass


class NoCdwEvents(AnalysisError):
    pass


class NoPostBaselineVisits(AnalysisError):
    pass


class InvalidConfig(EdssMarkovError, ValueError):
    pass


class ThresholdAboveScale(UserWarning):
    """A CDW threshold exceeded 10 and was clipped."""
