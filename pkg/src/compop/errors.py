"""Exception hierarchy.

The library never papers over an undefined quantity: every operation that
would need a convention beyond the documented arithmetic ones raises one of
these instead of guessing.
"""
from __future__ import annotations


class CompopError(Exception):
    """Base class for all library errors."""


class UndefinedOperationError(CompopError, ArithmeticError):
    """0/0 or inf/inf -- left undefined by the extended arithmetic."""


class SpaceFormatError(CompopError, ValueError):
    """Malformed space or family file; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class InvalidSpaceError(CompopError, ValueError):
    """A space, transformation or function violates a structural invariant."""


class PreconditionError(CompopError):
    """A checker's mathematical hypothesis fails; names the hypothesis."""

    def __init__(self, hypothesis: str, detail: str = ""):
        self.hypothesis = hypothesis
        message = f"hypothesis not satisfied: {hypothesis}"
        if detail:
            message += f" ({detail})"
        super().__init__(message)


class RepresentationError(CompopError):
    """A result leaves the finitely-representable class; never approximated."""


class InternalInconsistencyError(CompopError):
    """Two routes that must agree by theorem disagreed -- a library bug."""
