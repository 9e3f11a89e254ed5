"""Exception hierarchy shared across the package.

Every error raised on purpose derives from :class:`DagRcaError` so the CLI
can map families of failures onto stable exit codes.
"""


class DagRcaError(Exception):
    """Base class for all package errors."""


class ContractError(DagRcaError, ValueError):
    """A precondition of a public operation was violated."""


class DimensionError(ContractError):
    """Operand shapes are incompatible."""


class StateError(DagRcaError, RuntimeError):
    """An object was used in a state that does not allow the operation."""


class NumericError(DagRcaError, ArithmeticError):
    """A numerical routine failed (non-finite values, no convergence)."""


class SingularMatrixError(NumericError):
    """Matrix is singular or too ill-conditioned to invert.

    ``pivot`` is the smallest absolute pivot met during factorization and
    ``condition`` the 1-norm condition estimate (``inf`` if factorization
    broke down).
    """

    def __init__(self, message, pivot=0.0, condition=float("inf")):
        super().__init__(message)
        self.pivot = pivot
        self.condition = condition


class TrainingError(NumericError):
    """Structure learning diverged."""

    def __init__(self, message, outer_iteration, inner_step=None):
        super().__init__(message)
        self.outer_iteration = outer_iteration
        self.inner_step = inner_step


class InputError(DagRcaError):
    """Base for input/IO problems (CLI exit code 2)."""


class ParseError(InputError, ValueError):
    """A metric file could not be parsed. Carries the 1-based row/column."""

    def __init__(self, message, row=None, column=None):
        loc = []
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column}")
        if loc:
            message = f"{message} ({', '.join(loc)})"
        super().__init__(message)
        self.row = row
        self.column = column


class FetchError(InputError):
    """A Prometheus range query failed."""

    def __init__(self, message, query_id=None):
        if query_id is not None:
            message = f"[{query_id}] {message}"
        super().__init__(message)
        self.query_id = query_id


class AlignmentError(InputError):
    """A series could not be resampled onto the scrape grid."""
