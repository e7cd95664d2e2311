"""Exception hierarchy shared across the package.

Three broad families map onto the CLI exit codes: numerical evaluation
failures (exit 5), data/file problems (exit 3) and black-box protocol
failures (exit 4).
"""


class GridgefitError(Exception):
    """Base class for all package errors."""


class EvaluationError(GridgefitError):
    """Numerical evaluation could not produce a finite, trusted value."""

    exit_code = 5


class PoleError(EvaluationError):
    """A Gamma factor was requested at a non-positive integer and the
    pole could not be removed by jitter."""


class DivergenceError(EvaluationError):
    """The requested hypergeometric series is formally divergent."""


class NonConvergence(EvaluationError):
    """Series or iteration hit its term budget before converging."""


class ContourError(EvaluationError):
    """No admissible integration path separates the two Gamma pole
    families for the given parameters."""


class ZeroDirection(EvaluationError):
    """A projection direction with zero norm was supplied."""


class DegenerateTerm(EvaluationError):
    """A ridge term evaluated to the zero function; its weight carries
    no information and the caller should discard the term."""


class AllCandidatesFailed(EvaluationError):
    """Every (configuration, restart) candidate of a term fit died with
    an evaluation error."""


class DataError(GridgefitError):
    exit_code = 3


class ParseError(DataError):
    """Malformed CSV content; carries 1-based line and column indices."""

    def __init__(self, message, line=None, column=None):
        super().__init__(message)
        self.line = line
        self.column = column


class RaggedRows(DataError):
    """CSV rows do not all have the same number of fields."""


class ConstantColumn(DataError):
    """A feature column has fewer than two distinct values."""


class VersionMismatch(DataError):
    """Model file declares an unsupported format version."""


class SchemaError(DataError):
    """Model file is truncated or structurally invalid."""


class BlackBoxError(GridgefitError):
    exit_code = 4


class BlackBoxTimeout(BlackBoxError):
    """The child process did not answer within the I/O timeout."""


class MalformedReply(BlackBoxError):
    """The child produced a non-numeric reply line."""

    def __init__(self, message, line_index=None):
        super().__init__(message)
        self.line_index = line_index


class ChildExit(BlackBoxError):
    """The child process terminated while replies were still pending."""
