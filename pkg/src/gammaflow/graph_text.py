"""Line-oriented text format for dataflow graphs.

Grammar (``#`` starts a comment, blank lines are ignored)::

    node <id> source [<value>]
    node <id> arith <op> [lhs=<int> | rhs=<int>]
    node <id> compare <op> [lhs=<int> | rhs=<int>]
    node <id> steer
    node <id> inctag
    node <id> sink
    edge <label> <producer>[.<port>] <consumer>[.<slot>]

Producer ports are ``out`` (the default) or ``true`` / ``false`` on a steer.
Consumer slots are ``0`` / ``1`` on binary nodes and ``data`` / ``control``
on a steer; single-input consumers take no slot. ``serialize_graph`` writes
the canonical form: nodes sorted by id, then edges sorted by label.
"""

from __future__ import annotations

import logging

from lark import Lark, Token, Transformer, v_args
from lark.exceptions import (
    UnexpectedCharacters,
    UnexpectedEOF,
    UnexpectedInput,
    UnexpectedToken,
    VisitError,
)

from gammaflow.dataflow import STEER_SLOTS, DataflowGraph, Edge, Node, NodeKind, validate_graph
from gammaflow.errors import GraphSyntaxError, GraphValidationError
from gammaflow.models import Violation

logger = logging.getLogger(__name__)

_GRAMMAR = r"""
start: _NL* (_statement _NL+)* _statement?

_statement: node_decl | edge_decl

node_decl: "node" ID _kind
_kind: source | arith | compare | steer | inctag | sink
source: "source" [SIGNED]
arith: "arith" ARITH_OP [operand]
compare: "compare" CMP_OP [operand]
operand: SIDE "=" SIGNED
steer: "steer"
inctag: "inctag"
sink: "sink"

edge_decl: "edge" ID endpoint endpoint
endpoint: ID ["." ID]

SIDE: "lhs" | "rhs"
ARITH_OP: "+" | "-" | "*" | "/"
CMP_OP: "==" | "!=" | "<=" | ">=" | "<" | ">"
ID: /[A-Za-z0-9_]+/
SIGNED: /-?[0-9]+/
COMMENT: /#[^\n]*/
_NL: /\r?\n/

%import common.WS_INLINE
%ignore WS_INLINE
%ignore COMMENT
"""

_parser = Lark(_GRAMMAR, parser="lalr", propagate_positions=True)


class _GraphBuilder(Transformer):
    """Turns the parse tree into node and edge declarations."""

    def __init__(self) -> None:
        super().__init__()
        self.nodes: list[tuple[Node, int]] = []
        self.edges: list[tuple[str, Token, tuple[str, str | None], tuple[str, str | None]]] = []

    @v_args(inline=True)
    def source(self, value: Token | None) -> dict[str, object]:
        return {"kind": NodeKind.SOURCE, "value": None if value is None else int(value)}

    @v_args(inline=True)
    def arith(self, op: Token, operand: dict[str, object] | None) -> dict[str, object]:
        return {"kind": NodeKind.ARITH, "op": str(op), **(operand or {})}

    @v_args(inline=True)
    def compare(self, op: Token, operand: dict[str, object] | None) -> dict[str, object]:
        return {"kind": NodeKind.COMPARE, "op": str(op), **(operand or {})}

    @v_args(inline=True)
    def operand(self, side: Token, value: Token) -> dict[str, object]:
        return {"literal": int(value), "literal_left": str(side) == "lhs"}

    def steer(self, _: list[object]) -> dict[str, object]:
        return {"kind": NodeKind.STEER}

    def inctag(self, _: list[object]) -> dict[str, object]:
        return {"kind": NodeKind.INCTAG}

    def sink(self, _: list[object]) -> dict[str, object]:
        return {"kind": NodeKind.SINK}

    @v_args(inline=True)
    def node_decl(self, node_id: Token, spec: dict[str, object]) -> None:
        node = Node(id=str(node_id), **spec)  # type: ignore[arg-type]
        self.nodes.append((node, node_id.line or 0))

    @v_args(inline=True)
    def endpoint(self, node_id: Token, port: Token | None) -> tuple[str, str | None]:
        return (str(node_id), None if port is None else str(port))

    @v_args(inline=True)
    def edge_decl(
        self, label: Token, producer: tuple[str, str | None], consumer: tuple[str, str | None]
    ) -> None:
        self.edges.append((str(label), label, producer, consumer))


def _resolve_slot(consumer: Node | None, slot: str | None, label: str, line: int) -> int:
    if slot is None:
        return 0
    if consumer is not None and consumer.kind is NodeKind.STEER and slot in STEER_SLOTS:
        return STEER_SLOTS[slot]
    if slot.isdigit():
        return int(slot)
    raise GraphSyntaxError(f"edge {label}: unknown input slot {slot!r}", line=line)


def parse_graph_text(text: str) -> DataflowGraph:
    """Parse graph text into a validated ``DataflowGraph``.

    Args:
        text: Graph source in the format documented in this module.

    Returns:
        A graph for which ``validate_graph`` returns no violations.

    Raises:
        GraphSyntaxError: On malformed text, with line and column.
        GraphValidationError: If the graph declares duplicate node ids or
            labels, or breaks any other structural invariant.
    """
    try:
        tree = _parser.parse(text)
    except (UnexpectedToken, UnexpectedCharacters, UnexpectedEOF) as exc:
        expected = getattr(exc, "expected", None) or getattr(exc, "allowed", None) or ()
        raise GraphSyntaxError(
            "unexpected input",
            line=getattr(exc, "line", 0) or 0,
            column=getattr(exc, "column", 0) or 0,
            expected=[str(e) for e in expected],
        ) from exc
    except UnexpectedInput as exc:  # pragma: no cover - other lark failures
        raise GraphSyntaxError(str(exc)) from exc

    builder = _GraphBuilder()
    try:
        builder.transform(tree)
    except VisitError as exc:
        meta = getattr(exc.obj, "meta", None)
        raise GraphSyntaxError(
            f"in {exc.rule}: {exc.orig_exc}",
            line=getattr(meta, "line", 0) or 0,
            column=getattr(meta, "column", 0) or 0,
        ) from exc

    duplicates: list[Violation] = []
    node_lines: dict[str, int] = {}
    for node, line in builder.nodes:
        if node.id in node_lines:
            duplicates.append(
                Violation(
                    kind="duplicate-node",
                    subject=node.id,
                    message=f"declared on lines {node_lines[node.id]} and {line}",
                )
            )
        node_lines.setdefault(node.id, line)
    label_lines: dict[str, int] = {}
    for label, token, _, _ in builder.edges:
        line = token.line or 0
        if label in label_lines:
            duplicates.append(
                Violation(
                    kind="duplicate-label",
                    subject=label,
                    message=f"edge label {label} declared on lines {label_lines[label]} and {line}",
                )
            )
        label_lines.setdefault(label, line)
    if duplicates:
        raise GraphValidationError(duplicates)

    nodes = {n.id: n for n, _ in builder.nodes}
    edges = []
    for label, token, (producer, port), (consumer, slot) in builder.edges:
        edges.append(
            Edge(
                label=label,
                producer=producer,
                port=port or "out",
                consumer=consumer,
                slot=_resolve_slot(nodes.get(consumer), slot, label, token.line or 0),
            )
        )

    graph = DataflowGraph(nodes=tuple(n for n, _ in builder.nodes), edges=tuple(edges))
    violations = validate_graph(graph)
    if violations:
        raise GraphValidationError(violations)
    logger.debug("Parsed graph with %d nodes and %d edges", len(graph.nodes), len(graph.edges))
    return graph


def _format_node(node: Node) -> str:
    match node.kind:
        case NodeKind.SOURCE:
            tail = "" if node.value is None else f" {node.value}"
        case NodeKind.ARITH | NodeKind.COMPARE:
            tail = f" {node.op}"
            if node.literal is not None:
                tail += f" {'lhs' if node.literal_left else 'rhs'}={node.literal}"
        case _:
            tail = ""
    return f"node {node.id} {node.kind.value}{tail}"


def _format_edge(edge: Edge, nodes: dict[str, Node]) -> str:
    producer = edge.producer if edge.port == "out" else f"{edge.producer}.{edge.port}"
    consumer_node = nodes.get(edge.consumer)
    consumer = edge.consumer
    if consumer_node is not None and consumer_node.kind is NodeKind.STEER:
        consumer += ".data" if edge.slot == 0 else ".control"
    elif consumer_node is not None and consumer_node.arity() == 2:
        consumer += f".{edge.slot}"
    return f"edge {edge.label} {producer} {consumer}"


def serialize_graph(graph: DataflowGraph) -> str:
    """Render ``graph`` in canonical text form.

    Nodes are sorted by id and edges by label, so the output is identical for
    identical graphs regardless of construction order.
    """
    canon = graph.canonical()
    nodes = canon.node_map()
    lines = [_format_node(n) for n in canon.nodes]
    if canon.nodes and canon.edges:
        lines.append("")
    lines.extend(_format_edge(e, nodes) for e in canon.edges)
    return "\n".join(lines) + "\n" if lines else ""


def graph_summary(graph: DataflowGraph) -> str:
    """One-line description, e.g. ``13 nodes (9 operators: ...), 16 edges``."""
    counts = graph.kind_counts()
    ends = (NodeKind.SOURCE, NodeKind.SINK)
    operators = sum(v for k, v in counts.items() if NodeKind(k) not in ends)
    detail = ", ".join(f"{k} {v}" for k, v in counts.items())
    return (
        f"{len(graph.nodes)} nodes ({operators} operators; {detail}), "
        f"{len(graph.edges)} edges"
    )

