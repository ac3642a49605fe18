"""Exception hierarchy shared by all hetcorr modules.

Every error raised by the library derives from :class:`HetcorrError`, so
callers (notably the CLI) can map failure categories to stable exit codes
without string matching.
"""


class HetcorrError(Exception):
    """Base class for all hetcorr errors."""


class SeqSyntaxError(HetcorrError):
    """Sequence expression failed to parse.

    ``position`` is the 0-based offset into the source text where the
    problem was detected.
    """

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class SeqEvalError(HetcorrError):
    """Sequence expression produced a non-finite value or divided by zero."""

    def __init__(self, message: str, index: int | None = None):
        if index is not None:
            message = f"{message} (at i={index})"
        super().__init__(message)
        self.index = index


class ParamDomainError(HetcorrError):
    """A dependence parameter lies outside the family's admissible domain.

    ``index`` is the 1-based sequence position of the offending parameter,
    or None when the parameter was passed directly.
    """

    def __init__(self, message: str, index: int | None = None):
        if index is not None:
            message = f"{message} (sequence index i={index})"
        super().__init__(message)
        self.index = index


class UnsupportedFamilyOperation(HetcorrError):
    """The requested operation is intentionally not provided for this family."""


class TiesError(HetcorrError):
    """Exact ties found in strict mode.

    ``tie_report`` carries the (x_pairs, y_pairs) tie-pair counts.
    """

    def __init__(self, message: str, tie_report=None):
        super().__init__(message)
        self.tie_report = tie_report


class DegenerateSampleError(HetcorrError):
    """Sample cannot support the requested coefficient (n < 2, zero variance)."""


class BudgetError(HetcorrError):
    """Configured computation budget would be exceeded."""


class CsvFormatError(HetcorrError):
    """Ingested CSV is malformed; message carries row/column diagnostics."""
