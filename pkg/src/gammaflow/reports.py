"""Run and equivalence reports.

Reports are pydantic models so the CLI and the MCP tools share one shape.
``render_text`` gives the structured text the CLI prints by default and
``render_json`` the machine-readable form; both are byte-identical for
identical inputs and seeds.
"""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field

from gammaflow.dataflow_exec import DataflowRun
from gammaflow.gamma_exec import GammaRun
from gammaflow.models import Element, RunStatus, SourceKind

Observable = tuple[tuple[str, int], ...]
"""Terminal ``(label, value)`` pairs in canonical order, tags erased."""

Verdict = Literal["agree", "diverge", "inconclusive"]


def _format_observable(observable: Observable) -> str:
    return "{" + ", ".join(f"({label}, {value})" for label, value in observable) + "}"


class RunReport(BaseModel):
    """Result of executing one graph or program under one seed."""

    model_config = ConfigDict(frozen=True)

    kind: SourceKind = Field(description="graph or gamma")
    seed: int
    status: RunStatus
    steps: int = Field(description="Firings (graph) or applied reactions (gamma)")
    elements: list[Element] = Field(
        default_factory=list, description="Sink contents (graph) or terminal multiset (gamma)"
    )
    observable: list[tuple[str, int]] = Field(default_factory=list)
    trace: list[str] | None = Field(default=None, description="Full trace, when requested")

    @classmethod
    def from_dataflow(
        cls, run: DataflowRun, observable: Observable = (), *, trace: bool = False
    ) -> RunReport:
        return cls(
            kind=SourceKind.GRAPH,
            seed=run.seed,
            status=run.status,
            steps=run.state.steps,
            elements=run.state.sink_elements(),
            observable=list(observable),
            trace=[str(f) for f in run.trace] if trace else None,
        )

    @classmethod
    def from_gamma(
        cls, run: GammaRun, observable: Observable = (), *, trace: bool = False
    ) -> RunReport:
        return cls(
            kind=SourceKind.GAMMA,
            seed=run.seed,
            status=run.status,
            steps=run.steps,
            elements=run.multiset.elements(),
            observable=list(observable),
            trace=[str(r) for r in run.trace] if trace else None,
        )

    def render_text(self) -> str:
        heading = "sinks" if self.kind is SourceKind.GRAPH else "multiset"
        lines = [
            f"kind: {self.kind}",
            f"seed: {self.seed}",
            f"status: {self.status}",
            f"steps: {self.steps}",
            f"{heading}:",
            *(f"  {e}" for e in self.elements),
            f"observable: {_format_observable(tuple(self.observable))}",
        ]
        if self.trace is not None:
            lines.append("trace:")
            lines.extend(f"  {entry}" for entry in self.trace)
        return "\n".join(lines) + "\n"

    def render_json(self) -> str:
        return self.model_dump_json(indent=2) + "\n"


class SideResult(BaseModel):
    """One seeded run on one side of an equivalence check."""

    model_config = ConfigDict(frozen=True)

    seed: int
    status: RunStatus
    steps: int
    observable: list[tuple[str, int]]
    residue: list[Element] = Field(
        default_factory=list, description="Non-terminal elements left in the multiset"
    )


class PairVerdict(BaseModel):
    model_config = ConfigDict(frozen=True)

    seed_df: int
    seed_gamma: int
    verdict: Verdict


class EquivalenceReport(BaseModel):
    """Pairwise comparison of dataflow and Gamma runs over a list of seeds.

    A pair agrees when both runs terminated with equal observables,
    diverges when both terminated with different ones, and is inconclusive
    when either run exhausted its budget.
    """

    model_config = ConfigDict(frozen=True)

    graph_summary: str
    program_summary: str
    corrupted: bool = Field(default=False, description="Translated program was perturbed")
    dataflow: list[SideResult]
    gamma: list[SideResult]
    pairs: list[PairVerdict]

    def count(self, verdict: Verdict) -> int:
        return sum(1 for p in self.pairs if p.verdict == verdict)

    @property
    def agreements(self) -> int:
        return self.count("agree")

    @property
    def divergences(self) -> int:
        return self.count("diverge")

    @property
    def inconclusive(self) -> int:
        return self.count("inconclusive")

    def render_text(self) -> str:
        lines = [
            f"graph: {self.graph_summary}",
            f"program: {self.program_summary}",
        ]
        if self.corrupted:
            lines.append("corrupted: yes")
        for name, side in (("dataflow", self.dataflow), ("gamma", self.gamma)):
            lines.append(f"{name}:")
            for result in side:
                line = (
                    f"  seed {result.seed}: {result.status} after {result.steps} steps "
                    f"{_format_observable(tuple(result.observable))}"
                )
                if result.residue:
                    line += " residue " + ", ".join(str(e) for e in result.residue)
                lines.append(line)
        lines.append(
            f"pairs: {len(self.pairs)} agree={self.agreements} "
            f"diverge={self.divergences} inconclusive={self.inconclusive}"
        )
        lines.extend(f"{p.seed_df} {p.seed_gamma} {p.verdict}" for p in self.pairs)
        return "\n".join(lines) + "\n"

    def render_json(self) -> str:
        return self.model_dump_json(indent=2) + "\n"


class ExplorationReport(BaseModel):
    """Every terminal outcome of a graph or program, over all schedules."""

    model_config = ConfigDict(frozen=True)

    kind: SourceKind
    bound: int = Field(description="State bound the exploration ran under")
    terminals: list[list[Element]] = Field(
        default_factory=list, description="Sink contents (graph) or steady multisets (gamma)"
    )
    observables: list[list[tuple[str, int]]] = Field(default_factory=list)

    @property
    def confluent(self) -> bool:
        return len(self.observables) == 1

    def render_text(self) -> str:
        lines = [
            f"kind: {self.kind}",
            f"bound: {self.bound}",
            f"terminals: {len(self.terminals)}",
            *("  {" + ", ".join(str(e) for e in terminal) + "}" for terminal in self.terminals),
            f"observables: {len(self.observables)}",
            *(f"  {_format_observable(tuple(o))}" for o in self.observables),
            f"confluent: {'yes' if self.confluent else 'no'}",
        ]
        return "\n".join(lines) + "\n"

    def render_json(self) -> str:
        return self.model_dump_json(indent=2) + "\n"
