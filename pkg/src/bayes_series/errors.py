"""Exception hierarchy shared by the engines and the command line."""


class BayesSeriesError(Exception):
    """Base class for all package errors."""


class DomainError(BayesSeriesError, ValueError):
    """Parameter or input outside the admissible domain."""


class NonFiniteTermError(BayesSeriesError, ArithmeticError):
    """A series term evaluated to inf or nan."""

    def __init__(self, index, value):
        self.index = int(index)
        self.value = float(value)
        super().__init__(f"non-finite term {self.value!r} at i={self.index}")


class MissingReferenceError(BayesSeriesError, LookupError):
    """A bound needs reference block sums that were not supplied."""


class PrecisionLossError(BayesSeriesError, ArithmeticError):
    """Cancellation destroyed every significant digit of a result."""

    def __init__(self, message, condition=None):
        self.condition = condition
        super().__init__(message)


class MobiusTableError(BayesSeriesError):
    """Base class for table file problems."""


class TableFormatError(MobiusTableError):
    """File does not start with the expected magic bytes."""


class TableVersionError(MobiusTableError):
    """File has the right magic but an unsupported format version."""


class TruncatedTableError(MobiusTableError):
    """File is shorter than its header promises."""


class TableRangeError(MobiusTableError, IndexError):
    """Query beyond the table limit."""
