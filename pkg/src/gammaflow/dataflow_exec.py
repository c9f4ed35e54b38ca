"""Tagged-token execution of dynamic dataflow graphs.

A node instance ``(node, tag)`` is enabled when every input slot holds a
token with that tag; an inctag is enabled by a token on any one of its
alternative input edges. ``run`` repeatedly fires one enabled instance chosen
uniformly by a seeded PRNG until nothing is enabled or the step budget runs
out. Source nodes never fire: their tokens are placed on their output edges
at tag 0 before the run starts.
"""

from __future__ import annotations

import logging
import random
from collections import defaultdict
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

from gammaflow.dataflow import DataflowGraph, Node, NodeKind, validate_graph
from gammaflow.errors import BoundExceededError, ExecutionFault, GraphValidationError, InputError
from gammaflow.models import Element, RunStatus
from gammaflow.operators import apply_arith, apply_compare

logger = logging.getLogger(__name__)

DEFAULT_MAX_STEPS = 100_000

TokenStore = Mapping[tuple[str, int], Element]
"""Live tokens keyed by ``(label, tag)``; at most one token per key."""


@dataclass(frozen=True)
class _Wiring:
    """Port tables precomputed once per graph."""

    nodes: dict[str, Node]
    inputs: dict[str, tuple[tuple[str, ...], ...]]
    outputs: dict[str, dict[str, tuple[str, ...]]]
    firing_nodes: tuple[str, ...]

    @classmethod
    def of(cls, graph: DataflowGraph) -> _Wiring:
        nodes = graph.node_map()
        inputs: dict[str, tuple[tuple[str, ...], ...]] = {}
        outputs: dict[str, dict[str, tuple[str, ...]]] = {}
        for node in graph.nodes:
            by_slot: dict[int, list[str]] = defaultdict(list)
            for edge in graph.inputs(node.id):
                by_slot[edge.slot].append(edge.label)
            inputs[node.id] = tuple(tuple(by_slot[s]) for s in sorted(by_slot))
            outputs[node.id] = {
                port: tuple(e.label for e in graph.outputs(node.id, port)) for port in node.ports()
            }
        firing = tuple(sorted(n.id for n in graph.nodes if n.kind is not NodeKind.SOURCE))
        return cls(nodes=nodes, inputs=inputs, outputs=outputs, firing_nodes=firing)


@dataclass(frozen=True)
class Firing:
    """One entry of an execution trace."""

    node: str
    tag: int

    def __str__(self) -> str:
        return f"{self.node}@{self.tag}"


ExecTrace = tuple[Firing, ...]


@dataclass(frozen=True)
class ExecState:
    """Immutable snapshot of a dataflow execution.

    Attributes:
        graph: The graph being executed.
        store: Live tokens keyed by ``(label, tag)``.
        sinks: Tokens absorbed by each sink, keyed by the sink's input label,
            in arrival order.
        steps: Number of firings performed so far.
    """

    graph: DataflowGraph
    store: TokenStore
    sinks: Mapping[str, tuple[Element, ...]]
    steps: int = 0
    wiring: _Wiring | None = field(default=None, repr=False, compare=False)

    def sink_elements(self) -> list[Element]:
        """All sink contents in canonical order."""
        return sorted(el for els in self.sinks.values() for el in els)


@dataclass(frozen=True)
class DataflowRun:
    """Outcome of ``run``: final state, trace and how the run ended."""

    state: ExecState
    trace: ExecTrace
    status: RunStatus
    seed: int


def resolve_inputs(
    graph: DataflowGraph,
    inputs: Iterable[Element] = (),
    overrides: Mapping[str, int] | None = None,
) -> list[Element]:
    """Produce exactly one tag-0 token per Source output edge.

    A token in ``inputs`` wins for its edge; otherwise the Source's value
    comes from ``overrides`` (keyed by node id) or its declared default.

    Args:
        graph: Graph whose sources are fed.
        inputs: Explicit tokens, each on a Source output edge at tag 0.
        overrides: Source values keyed by node id.

    Returns:
        Initial tokens sorted by label.

    Raises:
        InputError: A token targets a non-source edge, two tokens share an
            edge, a token carries a nonzero tag, or a Source has no value.
    """
    overrides = overrides or {}
    source_ids = {n.id for n in graph.sources()}
    unknown = sorted(set(overrides) - source_ids)
    if unknown:
        raise InputError(f"no source node named {', '.join(unknown)}")
    source_edges = {e.label for e in graph.edges if e.producer in source_ids}

    tokens: dict[str, Element] = {}
    for element in inputs:
        if element.label not in source_edges:
            raise InputError(f"token {element} is not on a source output edge")
        if element.tag != 0:
            raise InputError(f"token {element} must carry tag 0")
        if element.label in tokens:
            raise InputError(f"two tokens given for edge {element.label}")
        tokens[element.label] = element

    for source in graph.sources():
        value = overrides.get(source.id, source.value)
        for edge in graph.outputs(source.id):
            if edge.label in tokens:
                continue
            if value is None:
                raise InputError(f"source {source.id} has no value for edge {edge.label}")
            tokens[edge.label] = Element(value=value, label=edge.label, tag=0)
    return [tokens[label] for label in sorted(tokens)]


def initial_state(
    graph: DataflowGraph,
    inputs: Iterable[Element] = (),
    overrides: Mapping[str, int] | None = None,
) -> ExecState:
    """Validate ``graph`` and place its initial tokens.

    Raises:
        GraphValidationError: If the graph breaks a structural invariant.
        InputError: See ``resolve_inputs``.
    """
    violations = validate_graph(graph)
    if violations:
        raise GraphValidationError(violations)
    tokens = resolve_inputs(graph, inputs, overrides)
    return ExecState(
        graph=graph,
        store={(t.label, t.tag): t for t in tokens},
        sinks={},
        wiring=_Wiring.of(graph),
    )


def _wiring(state: ExecState) -> _Wiring:
    return state.wiring if state.wiring is not None else _Wiring.of(state.graph)


def enabled_set(state: ExecState) -> frozenset[tuple[str, int]]:
    """Return every ``(node id, tag)`` pair whose inputs are all present.

    Steers need both data and control at the tag; inctags need a token on any
    one of their alternative incoming labels.
    """
    wiring = _wiring(state)
    tags_by_label: dict[str, set[int]] = defaultdict(set)
    for label, tag in state.store:
        tags_by_label[label].add(tag)

    enabled: set[tuple[str, int]] = set()
    for node_id in wiring.firing_nodes:
        slots = wiring.inputs[node_id]
        if not slots:
            continue
        tags: set[int] | None = None
        for alternatives in slots:
            present = set().union(*(tags_by_label.get(label, set()) for label in alternatives))
            tags = present if tags is None else tags & present
            if not tags:
                break
        enabled.update((node_id, tag) for tag in tags or ())
    return frozenset(enabled)


def is_terminated(state: ExecState) -> bool:
    """``True`` when no node instance is enabled."""
    return not enabled_set(state)


def _compute(node: Node, values: list[int], tag: int) -> int:
    if node.literal is not None:
        values = [node.literal, values[0]] if node.literal_left else [values[0], node.literal]
    left, right = values
    assert node.op is not None
    if node.kind is NodeKind.COMPARE:
        return int(apply_compare(node.op, left, right))
    try:
        return apply_arith(node.op, left, right)
    except ZeroDivisionError:
        raise ExecutionFault(node.id, "division by zero", tag=tag) from None


def fire(state: ExecState, node_id: str, tag: int) -> ExecState:
    """Fire one enabled node instance and return the successor state.

    Args:
        state: Current state.
        node_id: Node to fire.
        tag: Iteration tag of the operands to consume.

    Returns:
        New state with the inputs consumed and the outputs produced.

    Raises:
        ExecutionFault: The instance is not enabled, a division by zero
            occurred, or an output token would collide with a live token.
    """
    wiring = _wiring(state)
    node = wiring.nodes.get(node_id)
    if node is None or node.kind is NodeKind.SOURCE:
        raise ExecutionFault(node_id, "not a firing node", tag=tag)

    store = dict(state.store)
    consumed: list[Element] = []
    for alternatives in wiring.inputs[node_id]:
        label = next((lb for lb in alternatives if (lb, tag) in store), None)
        if label is None:
            raise ExecutionFault(node_id, "fired while not enabled", tag=tag)
        consumed.append(store.pop((label, tag)))
    values = [el.value for el in consumed]

    sinks = state.sinks
    out_tag = tag
    emitted: tuple[str, ...] = ()
    value = values[0]
    match node.kind:
        case NodeKind.ARITH | NodeKind.COMPARE:
            value = _compute(node, values, tag)
            emitted = wiring.outputs[node_id]["out"]
        case NodeKind.STEER:
            port = "true" if values[1] == 1 else "false"
            emitted = wiring.outputs[node_id][port]
        case NodeKind.INCTAG:
            out_tag = tag + 1
            emitted = wiring.outputs[node_id]["out"]
        case NodeKind.SINK:
            arrived = consumed[0]
            sinks = {**sinks, arrived.label: (*sinks.get(arrived.label, ()), arrived)}

    for label in emitted:
        key = (label, out_tag)
        if key in store:
            raise ExecutionFault(node_id, f"token collision on {label}@{out_tag}", tag=tag)
        store[key] = Element(value=value, label=label, tag=out_tag)

    logger.debug("fired %s@%d: consumed %d, produced %d", node_id, tag, len(consumed), len(emitted))
    return ExecState(
        graph=state.graph, store=store, sinks=sinks, steps=state.steps + 1, wiring=wiring
    )


def run(
    graph: DataflowGraph,
    inputs: Sequence[Element] = (),
    seed: int = 0,
    max_steps: int = DEFAULT_MAX_STEPS,
    overrides: Mapping[str, int] | None = None,
) -> DataflowRun:
    """Execute ``graph`` under a seeded random schedule.

    Args:
        graph: Graph to execute.
        inputs: Initial tokens (see ``resolve_inputs``).
        seed: PRNG seed; identical arguments give identical traces.
        max_steps: Firing budget. Reaching it is reported through the
            returned status, not raised.
        overrides: Source values keyed by node id.

    Returns:
        Final state, firing trace and status.

    Raises:
        ExecutionFault: Propagated from ``fire``.
    """
    if max_steps < 0:
        raise ValueError("max_steps must be >= 0")
    state = initial_state(graph, inputs, overrides)
    rng = random.Random(seed)
    trace: list[Firing] = []
    while True:
        enabled = sorted(enabled_set(state))
        if not enabled:
            status = RunStatus.TERMINATED
            break
        if state.steps >= max_steps:
            status = RunStatus.BUDGET_EXHAUSTED
            break
        node_id, tag = rng.choice(enabled)
        state = fire(state, node_id, tag)
        trace.append(Firing(node_id, tag))
    logger.info("dataflow run (seed=%d) %s after %d steps", seed, status, state.steps)
    return DataflowRun(state=state, trace=tuple(trace), status=status, seed=seed)


SinkMap = tuple[tuple[str, tuple[Element, ...]], ...]


def _sink_key(state: ExecState) -> SinkMap:
    return tuple(sorted((label, tuple(sorted(els))) for label, els in state.sinks.items()))


def exhaustive_sinks(
    graph: DataflowGraph,
    inputs: Sequence[Element] = (),
    bound: int = 200_000,
    overrides: Mapping[str, int] | None = None,
) -> set[SinkMap]:
    """Explore every firing interleaving and collect the terminal sink maps.

    Sink contents are compared as multisets, so arrival order does not make
    two terminals distinct.

    Raises:
        BoundExceededError: More than ``bound`` distinct states were reached.
    """
    start = initial_state(graph, inputs, overrides)
    seen: set[tuple[frozenset[tuple[tuple[str, int], Element]], SinkMap]] = set()
    terminals: set[SinkMap] = set()
    stack = [start]
    while stack:
        state = stack.pop()
        key = (frozenset(state.store.items()), _sink_key(state))
        if key in seen:
            continue
        seen.add(key)
        if len(seen) > bound:
            raise BoundExceededError(bound)
        enabled = sorted(enabled_set(state))
        if not enabled:
            terminals.add(_sink_key(state))
            continue
        stack.extend(fire(state, node_id, tag) for node_id, tag in enabled)
    return terminals
