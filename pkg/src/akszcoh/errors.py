"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class AKSZError(Exception):
    """Base class for errors raised by this package."""


class GradingError(AKSZError, ValueError):
    """An object does not carry the grading an operation requires."""


class TruncationError(AKSZError):
    """A computation needs jets (or block elements) beyond the available truncation."""

    def __init__(self, message, variable=None):
        super().__init__(message)
        self.variable = variable


class NotNilpotentError(AKSZError, ValueError):
    """A differential that must square to zero does not."""


class NotACocycleError(AKSZError, ValueError):
    """An element expected to be closed under a differential is not."""


class SpecError(AKSZError):
    """Problem with a spec document or an expression inside it.

    ``category`` names the kind of problem; ``location`` is a human-readable
    pointer (document path, line and column) when one is known.
    """

    category = "spec"

    def __init__(self, message, location: str = "", line: int | None = None,
                 column: int | None = None):
        self.detail = message
        self.location = location
        self.line = line
        self.column = column
        where = location
        if line is not None:
            where = f"{where}{', ' if where else ''}line {line}, column {column}"
        super().__init__(f"{where}: {message}" if where else message)


class SpecSyntaxError(SpecError):
    category = "syntax"


class UndeclaredSymbolError(SpecError):
    category = "undeclared-symbol"


class DuplicateCoordinateError(SpecError):
    category = "duplicate-coordinate"


class GhostInconsistencyError(SpecError):
    category = "ghost-inconsistency"


class SpecFormatError(SpecError):
    """Structurally invalid document (missing or mistyped fields)."""

    category = "format"


class SpecConsistencyError(SpecError):
    """Declared structures contradict each other (e.g. ``Q`` is not generated by ``S``)."""

    category = "inconsistent"
