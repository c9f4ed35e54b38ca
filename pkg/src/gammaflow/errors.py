"""Exception hierarchy for gammaflow.

Every failure raised by the library derives from ``GammaflowError`` so the
CLI and the MCP tool layer can map errors with a single ``except`` clause.
Invariant violations found by ``validate_graph`` / ``validate_reaction`` are
returned as data; they only become exceptions when a parser refuses input.
"""

from __future__ import annotations

from collections.abc import Sequence
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from gammaflow.models import Violation


class GammaflowError(Exception):
    """Base class for all gammaflow errors."""


class TextSyntaxError(GammaflowError):
    """Malformed graph, Gamma or multiset text.

    Attributes:
        line: 1-based line of the offending token (0 when unknown).
        column: 1-based column of the offending token (0 when unknown).
        expected: Token names the parser would have accepted instead.
    """

    def __init__(
        self,
        message: str,
        *,
        line: int = 0,
        column: int = 0,
        expected: Sequence[str] = (),
    ) -> None:
        self.line = line
        self.column = column
        self.expected = tuple(sorted(expected))
        location = f"line {line}, column {column}: " if line else ""
        hint = f" (expected one of: {', '.join(self.expected)})" if self.expected else ""
        super().__init__(f"{location}{message}{hint}")


class GraphSyntaxError(TextSyntaxError):
    """Malformed dataflow graph text."""


class GammaSyntaxError(TextSyntaxError):
    """Malformed Gamma program or multiset text."""


class InvalidError(GammaflowError):
    """Input parsed but broke one or more structural invariants."""

    def __init__(self, violations: Sequence[Violation]) -> None:
        self.violations = tuple(violations)
        super().__init__("; ".join(str(v) for v in self.violations) or "invalid input")


class GraphValidationError(InvalidError):
    """A dataflow graph failed ``validate_graph``."""


class GammaValidationError(InvalidError):
    """A Gamma program failed semantic checks (binding, names, null clauses)."""


class InputError(GammaflowError):
    """Initial tokens do not match the Source nodes of a graph."""


class ExecutionFault(GammaflowError):
    """A firing or reaction could not complete.

    Attributes:
        site: Node id (dataflow) or reaction name (Gamma) that faulted.
        tag: Iteration tag of the faulting firing, when known.
    """

    def __init__(self, site: str, reason: str, *, tag: int | None = None) -> None:
        self.site = site
        self.tag = tag
        self.reason = reason
        where = f"{site}@{tag}" if tag is not None else site
        super().__init__(f"execution fault at {where}: {reason}")


class ConversionError(GammaflowError):
    """A graph or reaction has a shape the converter cannot translate."""


class BoundExceededError(GammaflowError):
    """Exhaustive exploration visited more states than its bound allows."""

    def __init__(self, bound: int) -> None:
        self.bound = bound
        super().__init__(f"state space exceeds bound of {bound} states")


class NotTerminatedError(GammaflowError):
    """An observable was requested from a run that can still make progress."""


class UnknownKindError(GammaflowError):
    """Input of a kind the requested operation does not accept."""
