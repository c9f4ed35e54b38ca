"""Text-in, text-out operations shared by the CLI and the MCP tools.

Each function takes source text plus a ``SourceKind`` and returns either
text or a report model, so the two front ends differ only in how they read
input and present errors.
"""

from __future__ import annotations

import logging
from collections.abc import Mapping, Sequence
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, Field

from gammaflow.config import RunConfig
from gammaflow.convert import (
    ConversionReport,
    accepts_label,
    dataflow_to_gamma,
    fuse_chain,
    gamma_reaction_to_dataflow,
    gamma_to_dataflow,
    instantiate_for_multiset,
)
from gammaflow.dataflow import DataflowGraph
from gammaflow.dataflow_exec import exhaustive_sinks
from gammaflow.dataflow_exec import run as run_dataflow
from gammaflow.dot import export_dot
from gammaflow.element_text import format_elements, parse_elements, parse_tokens
from gammaflow.equiv import check_equivalence, observe_dataflow, observe_gamma
from gammaflow.errors import UnknownKindError
from gammaflow.gamma import Reaction
from gammaflow.gamma_exec import exhaustive_terminals, run_to_fixpoint
from gammaflow.gamma_text import parse_program, print_program, program_summary
from gammaflow.graph_text import graph_summary, parse_graph_text, serialize_graph
from gammaflow.models import Element, RunStatus, SourceKind
from gammaflow.reports import EquivalenceReport, ExplorationReport, RunReport

logger = logging.getLogger(__name__)

Direction = Literal["df2gamma", "gamma2df"]

EXTENSIONS = {
    ".df": SourceKind.GRAPH,
    ".gamma": SourceKind.GAMMA,
    ".mset": SourceKind.MULTISET,
}


class ParsedSource(BaseModel):
    """Canonical form of a parsed input."""

    kind: SourceKind
    summary: str
    canonical: str


class ConversionOutput(BaseModel):
    """Files produced by a conversion, keyed by file name, in emission order."""

    direction: Direction
    files: dict[str, str] = Field(default_factory=dict)
    reports: list[ConversionReport] = Field(default_factory=list)


def detect_kind(path: str | Path, override: SourceKind | None = None) -> SourceKind:
    """Kind of ``path`` from its extension, unless ``override`` is given.

    Raises:
        UnknownKindError: The extension is not ``.df``, ``.gamma`` or ``.mset``.
    """
    if override is not None:
        return override
    suffix = Path(path).suffix.lower()
    if suffix not in EXTENSIONS:
        raise UnknownKindError(f"cannot tell the kind of {path}; pass --kind graph|gamma|multiset")
    return EXTENSIONS[suffix]


def parse_overrides(assignments: Sequence[str]) -> dict[str, int]:
    """Turn ``NODE=VALUE`` strings into Source overrides.

    Raises:
        ValueError: An assignment is not ``NODE=<int>``.
    """
    overrides: dict[str, int] = {}
    for item in assignments:
        node, sep, value = item.partition("=")
        if not sep or not node.strip():
            raise ValueError(f"expected NODE=VALUE, got {item!r}")
        try:
            overrides[node.strip()] = int(value)
        except ValueError:
            raise ValueError(f"value of {node.strip()} is not an integer: {value!r}") from None
    return overrides


def parse_source(text: str, kind: SourceKind) -> ParsedSource:
    """Parse ``text`` and return its canonical form and one-line summary."""
    match kind:
        case SourceKind.GRAPH:
            graph = parse_graph_text(text)
            return ParsedSource(
                kind=kind, summary=graph_summary(graph), canonical=serialize_graph(graph)
            )
        case SourceKind.GAMMA:
            program = parse_program(text)
            return ParsedSource(
                kind=kind, summary=program_summary(program), canonical=print_program(program)
            )
        case SourceKind.MULTISET:
            elements = parse_elements(text)
            return ParsedSource(
                kind=kind, summary=f"{len(elements)} elements", canonical=format_elements(elements)
            )


def load_graph(text: str, kind: SourceKind) -> tuple[DataflowGraph, ConversionReport | None]:
    """A graph from graph text, or the graph rebuilt from a whole program."""
    if kind is SourceKind.GRAPH:
        return parse_graph_text(text), None
    if kind is SourceKind.GAMMA:
        return gamma_to_dataflow(parse_program(text))
    raise UnknownKindError(f"a {kind} file does not describe a graph")


def _consumable(reaction: Reaction, elements: Sequence[Element]) -> list[Element]:
    return [
        e for e in elements if any(accepts_label(reaction, p, e.label) for p in reaction.replace)
    ]


def convert_source(
    text: str,
    kind: SourceKind,
    *,
    stem: str = "program",
    fuse: bool = False,
    instantiate: bool = False,
    whole: bool = False,
    relabel: bool = False,
    inputs: Sequence[Element] = (),
    overrides: Mapping[str, int] | None = None,
    multiset: Sequence[Element] | None = None,
) -> ConversionOutput:
    """Convert in the direction implied by ``kind``.

    Graph text becomes ``<stem>.gamma`` and ``<stem>.mset`` (the initial
    multiset on its own); ``fuse`` applies chain fusion to the result.
    Gamma text becomes one ``<stem>.<reaction>.df`` per reaction, or a
    single ``<stem>.df`` with ``whole``; ``fuse`` applies chain fusion
    first, and ``instantiate`` replicates each reaction graph over the
    elements it can consume (``multiset``, or the program's own).
    """
    if kind is SourceKind.GRAPH:
        program, report = dataflow_to_gamma(
            parse_graph_text(text), inputs, overrides=overrides, relabel=relabel
        )
        if fuse:
            program = fuse_chain(program)
            report = report.model_copy(update={"target_summary": program_summary(program)})
        return ConversionOutput(
            direction="df2gamma",
            files={
                f"{stem}.gamma": print_program(program),
                f"{stem}.mset": format_elements(program.initial),
            },
            reports=[report],
        )
    if kind is not SourceKind.GAMMA:
        raise UnknownKindError(f"cannot convert a {kind} file")

    program = parse_program(text)
    if fuse:
        program = fuse_chain(program)
    output = ConversionOutput(direction="gamma2df")
    if whole:
        graph, report = gamma_to_dataflow(program)
        output.files[f"{stem}.df"] = serialize_graph(graph)
        output.reports.append(report)
        return output

    elements = list(program.initial if multiset is None else multiset)
    for reaction in program.reactions:
        graph, report = gamma_reaction_to_dataflow(reaction)
        if instantiate:
            graph, copies = instantiate_for_multiset(
                graph,
                _consumable(reaction, elements),
                report.terminal_map,
                source_labels=report.source_labels,
            )
            report = copies.model_copy(
                update={
                    "source_summary": f"reaction {reaction.name}",
                    "warnings": report.warnings + copies.warnings,
                    "non_round_trippable": report.non_round_trippable,
                }
            )
        output.files[f"{stem}.{reaction.name}.df"] = serialize_graph(graph)
        output.reports.append(report)
    return output


def run_source(
    text: str,
    kind: SourceKind,
    config: RunConfig,
    *,
    inputs: Sequence[Element] = (),
    overrides: Mapping[str, int] | None = None,
    multiset: Sequence[Element] | None = None,
) -> RunReport:
    """Execute graph or Gamma text under ``config`` and report the outcome.

    The observable of a graph run is its sink contents; that of a Gamma run
    every element of the terminal multiset, tags erased. Runs that exhaust
    their budget report an empty observable.
    """
    if kind is SourceKind.GRAPH:
        graph = parse_graph_text(text)
        result = run_dataflow(
            graph, inputs, seed=config.seed, max_steps=config.max_steps, overrides=overrides
        )
        observed = observe_dataflow(result.state) if result.status is RunStatus.TERMINATED else ()
        return RunReport.from_dataflow(result, observed, trace=config.trace)
    if kind is SourceKind.GAMMA:
        program = parse_program(text)
        run = run_to_fixpoint(
            program,
            initial=multiset,
            seed=config.seed,
            max_reactions=config.max_reactions,
            cap=config.cap,
        )
        observed = ()
        if run.status is RunStatus.TERMINATED:
            observed, _ = observe_gamma(run.multiset, {e.label for e in run.multiset})
        return RunReport.from_gamma(run, observed, trace=config.trace)
    raise UnknownKindError(f"cannot run a {kind} file")


def explore_source(
    text: str,
    kind: SourceKind,
    config: RunConfig,
    *,
    inputs: Sequence[Element] = (),
    overrides: Mapping[str, int] | None = None,
    multiset: Sequence[Element] | None = None,
) -> ExplorationReport:
    """Collect every terminal outcome of graph or Gamma text over all schedules.

    A single distinct observable means the result does not depend on the
    schedule.

    Raises:
        BoundExceededError: More than ``config.bound`` states were reached.
    """
    terminals: list[list[Element]]
    if kind is SourceKind.GRAPH:
        sink_maps = exhaustive_sinks(
            parse_graph_text(text), inputs, bound=config.bound, overrides=overrides
        )
        terminals = [[e for _, elements in sinks for e in elements] for sinks in sink_maps]
        observed = {
            tuple(sorted((label, e.value) for label, elements in sinks for e in elements))
            for sinks in sink_maps
        }
    elif kind is SourceKind.GAMMA:
        steady = exhaustive_terminals(parse_program(text), multiset, bound=config.bound)
        terminals = [m.elements() for m in steady]
        observed = {tuple(sorted((e.label, e.value) for e in m)) for m in steady}
    else:
        raise UnknownKindError(f"cannot explore a {kind} file")
    return ExplorationReport(
        kind=kind,
        bound=config.bound,
        terminals=sorted(sorted(t) for t in terminals),
        observables=[list(o) for o in sorted(observed)],
    )


def check_source(
    text: str,
    kind: SourceKind,
    config: RunConfig,
    seeds: Sequence[int],
    *,
    inputs: Sequence[Element] = (),
    overrides: Mapping[str, int] | None = None,
    corrupt: bool = False,
) -> EquivalenceReport:
    """Differential check of a graph (or a program rebuilt as one) against its translation."""
    graph, _ = load_graph(text, kind)
    return check_equivalence(
        graph,
        inputs,
        seeds,
        overrides=overrides,
        max_steps=config.max_steps,
        max_reactions=config.max_reactions,
        cap=config.cap,
        corrupt=corrupt,
    )


def dot_source(
    text: str, kind: SourceKind, *, reaction: str | None = None, whole: bool = False
) -> str:
    """DOT text of a graph, of one reaction's graph, or of every reaction's graph.

    Raises:
        KeyError: ``reaction`` names no reaction of the program.
    """
    if kind is SourceKind.GRAPH:
        return export_dot(parse_graph_text(text))
    if kind is not SourceKind.GAMMA:
        raise UnknownKindError(f"cannot draw a {kind} file")
    program = parse_program(text)
    if whole:
        graph, _ = gamma_to_dataflow(program)
        return export_dot(graph, name="program")
    chosen = [program.reaction(reaction)] if reaction is not None else list(program.reactions)
    return "".join(export_dot(gamma_reaction_to_dataflow(r)[0], name=r.name) for r in chosen)

