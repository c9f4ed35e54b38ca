"""Pydantic data models shared by the dataflow and Gamma sides.

``Element`` is both the Gamma multiset triple ``[value, label, tag]`` and the
dataflow token travelling on an edge. ``Violation`` is the record returned by
the graph and reaction validators.
"""

from __future__ import annotations

import re
from enum import StrEnum
from typing import Annotated

from pydantic import BaseModel, ConfigDict, Field, StringConstraints

LABEL_PATTERN = r"^[A-Za-z0-9_]+$"
_LABEL_RE = re.compile(LABEL_PATTERN)

Label = Annotated[str, StringConstraints(pattern=LABEL_PATTERN)]
"""Edge / element label: nonempty, alphanumeric plus underscore."""


def is_label(text: str) -> bool:
    """Return ``True`` if ``text`` is a well-formed label."""
    return bool(_LABEL_RE.match(text))


class RunStatus(StrEnum):
    """How an execution run ended."""

    TERMINATED = "terminated"
    BUDGET_EXHAUSTED = "budget-exhausted"


class SourceKind(StrEnum):
    """What a piece of input text holds."""

    GRAPH = "graph"
    GAMMA = "gamma"
    MULTISET = "multiset"


class Element(BaseModel):
    """A tagged value: a multiset element in Gamma, a token in dataflow.

    Elements are totally ordered by ``(value, label, tag)`` so multisets and
    sink contents have one canonical listing.
    """

    model_config = ConfigDict(frozen=True)

    value: int = Field(description="Signed integer payload (booleans are 0/1)")
    label: Label = Field(description="Edge label the element travels on")
    tag: int = Field(default=0, ge=0, description="Iteration tag, 0 for initial tokens")

    def sort_key(self) -> tuple[int, str, int]:
        return (self.value, self.label, self.tag)

    def __lt__(self, other: Element) -> bool:
        return self.sort_key() < other.sort_key()

    def __str__(self) -> str:
        return f"[{self.value}, '{self.label}', {self.tag}]"


class Violation(BaseModel):
    """One broken invariant, reported as data rather than raised."""

    model_config = ConfigDict(frozen=True)

    kind: str = Field(description="Violation class, e.g. arity, duplicate-label, untagged-cycle")
    subject: str = Field(description="Node id, edge label or reaction name at fault")
    message: str = Field(description="Human-readable explanation")

    def __str__(self) -> str:
        return f"{self.kind} at {self.subject}: {self.message}"
