"""Exception hierarchy shared by all panreg modules.

Each class carries the CLI exit code it maps to, so the command-line layer
can translate failures without a lookup table.
"""


class PanError(Exception):
    """Base class for all panreg errors."""

    exit_code = 5
    kind = "internal"


class DataError(PanError):
    exit_code = 3
    kind = "data"


class InsufficientDataError(DataError):
    """Too few observations (or degrees of freedom) for the operation."""

    kind = "insufficient_data"


class ParseError(DataError):
    """A CSV or config cell could not be parsed."""

    kind = "parse"

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class SchemaError(DataError):
    """Structural problem with an input file (empty, duplicate headers, ...)."""

    kind = "schema"


class NumericError(PanError):
    exit_code = 4
    kind = "numeric"


class DegenerateInputError(NumericError):
    """Zero-norm vectors or other inputs where a formula is undefined."""

    kind = "degenerate_input"


class RankError(NumericError):
    """Design matrix is (numerically) rank deficient."""

    kind = "rank"


class DomainError(NumericError):
    """Parameter outside its admissible range, e.g. a negative ridge penalty."""

    kind = "domain"


class ConvergenceError(NumericError):
    """Optimizer hit its iteration limit.

    ``best`` holds the best iterate found and ``best_value`` its objective.
    """

    kind = "convergence"

    def __init__(self, message, best=None, best_value=None):
        super().__init__(message)
        self.best = best
        self.best_value = best_value


class TuningError(NumericError):
    kind = "tuning"
