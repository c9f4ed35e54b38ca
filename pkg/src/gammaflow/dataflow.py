"""Dynamic dataflow graph IR and its validator.

A graph is a set of ``Node`` records plus a set of labelled ``Edge`` records.
Ports are derived from the edges: an edge leaves ``producer.port`` and enters
``consumer`` at input ``slot``. Fan-out is expressed by several edges leaving
the same port, each with its own label.

Node kinds and their arity rules:

- ``source``: no inputs, at least one output edge. May carry a default value.
- ``arith`` / ``compare``: two inputs (slots 0 and 1), or one input plus a
  literal operand on the left or right. At least one output edge.
- ``steer``: data on slot 0, boolean control on slot 1; output ports ``true``
  and ``false`` with any number of edges each.
- ``inctag``: one logical input fed by one or more alternative edges, one
  output port with at least one edge.
- ``sink``: exactly one input, no outputs.

Every cycle must pass through an ``inctag`` node so loop iterations carry
distinct tags.
"""

from __future__ import annotations

import graphlib
from collections import Counter
from enum import StrEnum

from pydantic import BaseModel, ConfigDict, Field

from gammaflow.models import Label, Violation
from gammaflow.operators import ARITH_OPS, COMPARE_OPS


class NodeKind(StrEnum):
    """Kinds of dataflow instruction."""

    SOURCE = "source"
    ARITH = "arith"
    COMPARE = "compare"
    STEER = "steer"
    INCTAG = "inctag"
    SINK = "sink"


OPERATOR_KINDS = frozenset({NodeKind.ARITH, NodeKind.COMPARE, NodeKind.STEER, NodeKind.INCTAG})

STEER_PORTS = ("true", "false")
STEER_SLOTS = {"data": 0, "control": 1}


class Node(BaseModel):
    """A dataflow instruction."""

    model_config = ConfigDict(frozen=True)

    id: Label = Field(description="Node identifier, unique within a graph")
    kind: NodeKind
    op: str | None = Field(default=None, description="Operator for arith/compare nodes")
    value: int | None = Field(default=None, description="Default value of a source node")
    literal: int | None = Field(default=None, description="Constant operand of arith/compare")
    literal_left: bool = Field(default=False, description="Literal is the left operand")

    def arity(self) -> int:
        """Number of input slots this node reads."""
        match self.kind:
            case NodeKind.SOURCE:
                return 0
            case NodeKind.ARITH | NodeKind.COMPARE:
                return 1 if self.literal is not None else 2
            case NodeKind.STEER:
                return 2
            case _:
                return 1

    def ports(self) -> tuple[str, ...]:
        """Output port names this node may produce on."""
        match self.kind:
            case NodeKind.SINK:
                return ()
            case NodeKind.STEER:
                return STEER_PORTS
            case _:
                return ("out",)

    def descriptor(self) -> tuple[str, str | None, int | None, bool, int | None]:
        """Id-free description used for isomorphism checks."""
        return (self.kind.value, self.op, self.literal, self.literal_left, self.value)

    def describe(self) -> str:
        """Short operator text, e.g. ``+``, ``> 0`` or ``1 -``."""
        match self.kind:
            case NodeKind.SOURCE:
                return "source" if self.value is None else f"source {self.value}"
            case NodeKind.ARITH | NodeKind.COMPARE:
                if self.literal is None:
                    return str(self.op)
                if self.literal_left:
                    return f"{self.literal} {self.op}"
                return f"{self.op} {self.literal}"
            case _:
                return self.kind.value


class Edge(BaseModel):
    """A labelled data dependency from a producer port to a consumer slot."""

    model_config = ConfigDict(frozen=True)

    label: Label
    producer: Label = Field(description="Producing node id")
    port: str = Field(default="out", description="Producer output port: out, true or false")
    consumer: Label = Field(description="Consuming node id")
    slot: int = Field(default=0, ge=0, description="Consumer input slot")


class DataflowGraph(BaseModel):
    """An immutable dynamic dataflow graph."""

    model_config = ConfigDict(frozen=True)

    nodes: tuple[Node, ...] = ()
    edges: tuple[Edge, ...] = ()

    def node_map(self) -> dict[str, Node]:
        return {n.id: n for n in self.nodes}

    def edge_map(self) -> dict[str, Edge]:
        return {e.label: e for e in self.edges}

    def inputs(self, node_id: str) -> list[Edge]:
        """Edges entering ``node_id``, ordered by slot then label."""
        return sorted(
            (e for e in self.edges if e.consumer == node_id), key=lambda e: (e.slot, e.label)
        )

    def outputs(self, node_id: str, port: str | None = None) -> list[Edge]:
        """Edges leaving ``node_id`` (optionally one port), in declaration order."""
        return [
            e for e in self.edges if e.producer == node_id and (port is None or e.port == port)
        ]

    def sources(self) -> list[Node]:
        return [n for n in self.nodes if n.kind is NodeKind.SOURCE]

    def sink_labels(self) -> list[str]:
        """Labels of edges that end in a Sink node, sorted."""
        sinks = {n.id for n in self.nodes if n.kind is NodeKind.SINK}
        return sorted(e.label for e in self.edges if e.consumer in sinks)

    def canonical(self) -> DataflowGraph:
        """Same graph with nodes sorted by id and edges sorted by label."""
        return DataflowGraph(
            nodes=tuple(sorted(self.nodes, key=lambda n: n.id)),
            edges=tuple(sorted(self.edges, key=lambda e: e.label)),
        )

    def kind_counts(self) -> dict[str, int]:
        counts = Counter(n.kind.value for n in self.nodes)
        return {k.value: counts[k.value] for k in NodeKind if counts[k.value]}

    def edge_signature(self) -> Counter[tuple[object, ...]]:
        """Multiset of id-free edge descriptions.

        Two graphs with equal signatures have the same labels wired between
        nodes of the same kinds, operators and constants; this is the
        isomorphism check used when node ids differ.
        """
        nodes = self.node_map()
        return Counter(
            (
                e.label,
                nodes[e.producer].descriptor() if e.producer in nodes else None,
                e.port,
                nodes[e.consumer].descriptor() if e.consumer in nodes else None,
                e.slot,
            )
            for e in self.edges
        )


def _node_violations(node: Node, graph: DataflowGraph) -> list[Violation]:
    found: list[Violation] = []
    inputs = graph.inputs(node.id)
    outputs = graph.outputs(node.id)

    def arity(message: str) -> None:
        found.append(Violation(kind="arity", subject=node.id, message=message))

    if node.kind is NodeKind.ARITH and node.op not in ARITH_OPS:
        found.append(
            Violation(kind="operator", subject=node.id, message=f"unknown arith op {node.op!r}")
        )
    if node.kind is NodeKind.COMPARE and node.op not in COMPARE_OPS:
        found.append(
            Violation(kind="operator", subject=node.id, message=f"unknown compare op {node.op!r}")
        )
    if node.literal_left and node.literal is None:
        found.append(
            Violation(kind="operator", subject=node.id, message="literal_left set without literal")
        )

    match node.kind:
        case NodeKind.SOURCE:
            if inputs:
                arity(f"source has {len(inputs)} inputs, expected 0")
            if not outputs:
                arity("source has no output edge")
        case NodeKind.SINK:
            if len(inputs) != 1:
                arity(f"sink has {len(inputs)} inputs, expected 1")
            if outputs:
                arity(f"sink has {len(outputs)} outputs, expected 0")
        case NodeKind.INCTAG:
            if not inputs:
                arity("inctag has no input edge")
            if not outputs:
                arity("inctag has no output edge")
        case _:
            slots = Counter(e.slot for e in inputs)
            wanted = range(node.arity())
            if sorted(slots) != list(wanted) or any(c != 1 for c in slots.values()):
                arity(
                    f"{node.kind.value} needs one edge on each of slots "
                    f"{list(wanted)}, got {dict(sorted(slots.items()))}"
                )
            if node.kind is not NodeKind.STEER and not outputs:
                arity(f"{node.kind.value} has no output edge")
    return found


def _cycle_violations(graph: DataflowGraph) -> list[Violation]:
    nodes = graph.node_map()
    sorter: graphlib.TopologicalSorter[str] = graphlib.TopologicalSorter()
    for node in graph.nodes:
        if node.kind is not NodeKind.INCTAG:
            sorter.add(node.id)
    for edge in graph.edges:
        producer, consumer = nodes.get(edge.producer), nodes.get(edge.consumer)
        if producer is None or consumer is None:
            continue
        if NodeKind.INCTAG in (producer.kind, consumer.kind):
            continue
        sorter.add(edge.consumer, edge.producer)
    try:
        sorter.prepare()
    except graphlib.CycleError as exc:
        cycle = exc.args[1]
        return [
            Violation(
                kind="untagged-cycle",
                subject=cycle[0],
                message="cycle without an inctag node: " + " -> ".join(cycle),
            )
        ]
    return []


def validate_graph(graph: DataflowGraph) -> list[Violation]:
    """Check every structural invariant of ``graph``.

    Args:
        graph: The graph to check.

    Returns:
        All violations found, each naming the node or edge at fault. An empty
        list means the graph is valid.
    """
    violations: list[Violation] = []
    nodes = graph.node_map()

    for node_id, count in Counter(n.id for n in graph.nodes).items():
        if count > 1:
            violations.append(
                Violation(kind="duplicate-node", subject=node_id, message=f"declared {count} times")
            )
    for label, count in Counter(e.label for e in graph.edges).items():
        if count > 1:
            violations.append(
                Violation(kind="duplicate-label", subject=label, message=f"used by {count} edges")
            )

    for edge in graph.edges:
        producer, consumer = nodes.get(edge.producer), nodes.get(edge.consumer)
        if producer is None or consumer is None:
            missing = edge.producer if producer is None else edge.consumer
            violations.append(
                Violation(
                    kind="dangling-edge", subject=edge.label, message=f"unknown node {missing!r}"
                )
            )
            continue
        if edge.port not in producer.ports():
            violations.append(
                Violation(
                    kind="port",
                    subject=edge.label,
                    message=f"{producer.kind.value} {producer.id} has no output port {edge.port!r}",
                )
            )
        if consumer.kind is NodeKind.SOURCE:
            continue  # reported as an arity violation on the source
        if edge.slot >= max(consumer.arity(), 1):
            violations.append(
                Violation(
                    kind="port",
                    subject=edge.label,
                    message=f"{consumer.kind.value} {consumer.id} has no input slot {edge.slot}",
                )
            )

    for node in graph.nodes:
        violations.extend(_node_violations(node, graph))
    violations.extend(_cycle_violations(graph))
    return violations
