"""Exception hierarchy.

Two families matter to callers (and to the CLI exit-code contract):
``ValidationError`` for malformed inputs and violated invariants, and
``NumericalError`` for rank deficiency and degenerate coding ranges.
"""

from __future__ import annotations


class SlideKitError(Exception):
    """Base class for all package errors."""


class ValidationError(SlideKitError, ValueError):
    """An input violates a stated invariant."""


class ParseError(ValidationError):
    """A design or data file could not be parsed.

    ``line`` and ``column`` are 1-based and refer to the offending file.
    """

    def __init__(self, message: str, path=None, line: int | None = None, column: int | None = None):
        self.path = path
        self.line = line
        self.column = column
        where = []
        if path is not None:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column}")
        prefix = ", ".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class MissingSlidingEntry(ValidationError):
    pass


class UnknownLevelLabel(ValidationError):
    pass


class UnsupportedLevelCount(ValidationError):
    pass


class UnsupportedDegree(ValidationError):
    pass


class OutOfRange(ValidationError):
    pass


class DuplicateParentLevel(ValidationError):
    pass


class OffDesignParentLevel(ValidationError):
    """Nested-effects models cannot predict between parent levels."""


class NumericalError(SlideKitError, ArithmeticError):
    """Numerical failure: singular systems or degenerate ranges."""


class DegenerateRange(NumericalError):
    pass


class RankDeficient(NumericalError):
    """The model matrix does not have full column rank.

    Attributes
    ----------
    rank : int
        Numerical rank of the matrix.
    dependent : list of str
        Terms that are linear combinations of earlier terms.
    circuit : list of str
        A minimal linearly dependent subset containing the first
        dependent term.
    """

    def __init__(self, rank: int, n_terms: int, dependent: list[str], circuit: list[str]):
        self.rank = rank
        self.n_terms = n_terms
        self.dependent = list(dependent)
        self.circuit = list(circuit)
        super().__init__(
            f"model matrix has rank {rank} < {n_terms} columns; "
            f"dependent terms: {', '.join(self.dependent)}; "
            f"minimal dependent subset: {{{', '.join(self.circuit)}}}"
        )


class ZeroResidualDf(UserWarning):
    """Saturated fit: coefficients are available but inference is not."""
