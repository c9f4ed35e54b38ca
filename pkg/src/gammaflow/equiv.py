"""Differential testing of a graph against its Gamma translation.

The observable of a terminated run is the multiset of ``(label, value)``
pairs on its terminal labels with tags erased: Sink contents on the
dataflow side, elements on the translated program's sink labels on the
Gamma side. Loop translations may finish at different tags than the graph,
so tags are not compared. Gamma labels are mapped back to graph edge
labels before comparing.
"""

from __future__ import annotations

import logging
from collections.abc import Collection, Iterable, Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

from gammaflow.convert import dataflow_to_gamma
from gammaflow.dataflow import DataflowGraph
from gammaflow.dataflow_exec import DEFAULT_MAX_STEPS, ExecState, is_terminated
from gammaflow.dataflow_exec import run as run_dataflow
from gammaflow.errors import NotTerminatedError
from gammaflow.gamma import BinOp, Num, Output, Program, Reaction
from gammaflow.gamma_exec import DEFAULT_MATCH_CAP, DEFAULT_MAX_REACTIONS, Multiset, run_to_fixpoint
from gammaflow.models import Element, RunStatus
from gammaflow.operators import ARITH_OPS
from gammaflow.reports import EquivalenceReport, Observable, PairVerdict, SideResult, Verdict

logger = logging.getLogger(__name__)


def _canonical(pairs: Iterable[tuple[str, int]]) -> Observable:
    return tuple(sorted(pairs))


def observe_dataflow(state: ExecState, label_map: Mapping[str, str] | None = None) -> Observable:
    """Flatten the sinks of a terminated run into its observable.

    Args:
        state: Final state of a run.
        label_map: Optional renaming applied to sink labels.

    Raises:
        NotTerminatedError: Some node instance is still enabled.
    """
    if not is_terminated(state):
        raise NotTerminatedError(f"dataflow run stopped after {state.steps} steps with work left")
    rename = label_map or {}
    return _canonical(
        (rename.get(label, label), element.value)
        for label, elements in state.sinks.items()
        for element in elements
    )


def observe_gamma(
    multiset: Multiset, terminal_labels: Collection[str]
) -> tuple[Observable, list[Element]]:
    """Split a steady multiset into its observable and the residue.

    Returns:
        The ``(label, value)`` pairs of elements on ``terminal_labels`` and,
        separately, every other element in canonical order.
    """
    terminal = set(terminal_labels)
    observed = _canonical((e.label, e.value) for e in multiset if e.label in terminal)
    residue = [e for e in multiset if e.label not in terminal]
    if residue:
        logger.warning("%d non-terminal element(s) left in the multiset", len(residue))
    return observed, residue


def corrupt_program(program: Program) -> Program:
    """Add one to the value produced by the first arithmetic reaction.

    Used as a negative control: a checker that still reports agreement on
    the result is broken. Programs without an arithmetic output come back
    unchanged.
    """
    for index, reaction in enumerate(program.reactions):
        for c_index, clause in enumerate(reaction.by):
            if clause.guard is not None or not clause.outputs:
                continue
            if not any(
                isinstance(o.value, BinOp) and o.value.op in ARITH_OPS for o in clause.outputs
            ):
                continue
            outputs = tuple(
                Output(BinOp("+", o.value, Num(1)), o.label, o.tag) for o in clause.outputs
            )
            clauses = list(reaction.by)
            clauses[c_index] = replace(clause, outputs=outputs)
            perturbed = Reaction(name=reaction.name, replace=reaction.replace, by=tuple(clauses))
            reactions = list(program.reactions)
            reactions[index] = perturbed
            logger.info("corrupted reaction %s", reaction.name)
            return Program(reactions=tuple(reactions), initial=program.initial)
    logger.warning("no arithmetic reaction to corrupt")
    return program


def _verdict(df: SideResult, gamma: SideResult) -> Verdict:
    if df.status is not RunStatus.TERMINATED or gamma.status is not RunStatus.TERMINATED:
        return "inconclusive"
    return "agree" if df.observable == gamma.observable else "diverge"


def check_equivalence(
    graph: DataflowGraph,
    inputs: Sequence[Element] = (),
    seeds: Sequence[int] = (0,),
    *,
    overrides: Mapping[str, int] | None = None,
    max_steps: int = DEFAULT_MAX_STEPS,
    max_reactions: int = DEFAULT_MAX_REACTIONS,
    cap: int = DEFAULT_MATCH_CAP,
    corrupt: bool = False,
    workers: int | None = None,
) -> EquivalenceReport:
    """Run ``graph`` and its Gamma translation under every seed and compare.

    Every dataflow seed is paired with every Gamma seed. Seed runs are fanned
    out over a thread pool; results are collected in seed order, so the
    report does not depend on scheduling.

    Args:
        graph: Graph to check.
        inputs: Source tokens (see ``resolve_inputs``).
        seeds: Seeds used on both sides.
        overrides: Source values keyed by node id.
        max_steps: Dataflow step budget per run.
        max_reactions: Gamma reaction budget per run.
        cap: Per-reaction binding enumeration cap.
        corrupt: Perturb the translated program (negative control).
        workers: Thread pool size; ``None`` lets the executor choose.

    Returns:
        The report; budget exhaustion shows up as inconclusive pairs.

    Raises:
        GraphValidationError: If ``graph`` is invalid.
        InputError: If the inputs do not fit the graph's Sources.
        ExecutionFault: If a run on either side faults.
    """
    program, conversion = dataflow_to_gamma(graph, inputs, overrides=overrides)
    if corrupt:
        program = corrupt_program(program)
    back = {target: source for source, target in conversion.label_map.items()}

    def dataflow_side(seed: int) -> SideResult:
        result = run_dataflow(graph, inputs, seed=seed, max_steps=max_steps, overrides=overrides)
        observed: Observable = ()
        if result.status is RunStatus.TERMINATED:
            observed = observe_dataflow(result.state)
        return SideResult(
            seed=seed, status=result.status, steps=result.state.steps, observable=list(observed)
        )

    def gamma_side(seed: int) -> SideResult:
        result = run_to_fixpoint(program, seed=seed, max_reactions=max_reactions, cap=cap)
        observed, residue = observe_gamma(result.multiset, conversion.sink_labels)
        return SideResult(
            seed=seed,
            status=result.status,
            steps=result.steps,
            observable=list(_canonical((back.get(lbl, lbl), value) for lbl, value in observed)),
            residue=residue,
        )

    with ThreadPoolExecutor(max_workers=workers) as pool:
        df_results = list(pool.map(dataflow_side, seeds))
        gamma_results = list(pool.map(gamma_side, seeds))

    pairs = [
        PairVerdict(seed_df=df.seed, seed_gamma=gm.seed, verdict=_verdict(df, gm))
        for df in df_results
        for gm in gamma_results
    ]
    report = EquivalenceReport(
        graph_summary=conversion.source_summary,
        program_summary=conversion.target_summary,
        corrupted=corrupt,
        dataflow=df_results,
        gamma=gamma_results,
        pairs=pairs,
    )
    logger.info(
        "equivalence over %d seeds: %d agree, %d diverge, %d inconclusive",
        len(seeds),
        report.agreements,
        report.divergences,
        report.inconclusive,
    )
    return report
