"""Conversions between dynamic dataflow graphs and Gamma programs.

``dataflow_to_gamma`` turns every operator node into a reaction and every
edge into a multiset label; Source tokens form the initial multiset.
``gamma_reaction_to_dataflow`` goes the other way for one reaction: one
Source per pattern, a Compare node and Steers for a guarded reaction, trees
of Arith nodes for output expressions and a Sink per output.
``gamma_to_dataflow`` stitches the per-reaction graphs of a whole program
back together along labels with a single producer and a single consumer.
``instantiate_for_multiset`` replicates a reaction graph to cover a multiset
and ``fuse_chain`` merges producer reactions into their only consumer.
"""

from __future__ import annotations

import logging
from collections import Counter, defaultdict
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field, replace
from typing import Literal

from pydantic import BaseModel, Field, model_validator

from gammaflow.dataflow import DataflowGraph, Edge, Node, NodeKind, validate_graph
from gammaflow.dataflow_exec import resolve_inputs
from gammaflow.errors import ConversionError, GraphValidationError
from gammaflow.gamma import (
    BOOL_OPS,
    BinOp,
    ByClause,
    Expr,
    LabelLit,
    Not,
    Num,
    Output,
    Pattern,
    Program,
    Reaction,
    Var,
    canonical_reaction,
    fold,
    free_vars,
    guard_label_literals,
    produced_labels,
    substitute,
    walk,
)
from gammaflow.gamma_text import program_summary
from gammaflow.graph_text import graph_summary
from gammaflow.models import Element
from gammaflow.operators import ARITH_OPS, COMPARE_OPS, NEGATED, OP_NAMES

logger = logging.getLogger(__name__)


class ConversionReport(BaseModel):
    """What a conversion produced and what it could not preserve."""

    direction: Literal["df2gamma", "gamma2df"]
    source_summary: str = Field(default="", description="Summary of the input")
    target_summary: str = Field(default="", description="Summary of the output")
    label_map: dict[str, str] = Field(
        default_factory=dict, description="Graph edge label to emitted multiset label"
    )
    terminal_map: dict[str, str] = Field(
        default_factory=dict, description="Graph sink edge label to the Gamma label it stands for"
    )
    sink_labels: list[str] = Field(
        default_factory=list, description="Terminal labels, named as in the output"
    )
    warnings: list[str] = Field(default_factory=list)
    non_round_trippable: list[str] = Field(
        default_factory=list, description="Reactions whose graph cannot convert back verbatim"
    )
    instances: int = Field(default=0, description="Graph copies made by instantiation")
    leftovers: list[Element] = Field(
        default_factory=list, description="Elements no instance consumed"
    )
    source_labels: list[tuple[str, str | None]] = Field(
        default_factory=list,
        description="Source node ids in pattern order, with the Gamma label each accepts",
    )

    @model_validator(mode="after")
    def _label_map_is_injective(self) -> ConversionReport:
        targets = list(self.label_map.values())
        if len(set(targets)) != len(targets):
            raise ValueError("label map is not injective")
        return self


def _warn(warnings: list[str], message: str) -> None:
    logger.warning(message)
    warnings.append(message)


# --- dataflow -> Gamma ---


def _label_map(graph: DataflowGraph, relabel: bool) -> dict[str, str]:
    if not relabel:
        return {e.label: e.label for e in graph.edges}
    mapping: dict[str, str] = {}
    for node in sorted(graph.nodes, key=lambda n: n.id):
        index = 0
        for port in node.ports():
            for edge in sorted(graph.outputs(node.id, port), key=lambda e: e.label):
                index += 1
                mapping[edge.label] = f"n{node.id}_o{index}"
    return mapping


def _any_of(var: str, labels: list[str]) -> Expr:
    tests: list[Expr] = [BinOp("==", Var(var), LabelLit(label)) for label in labels]
    guard = tests[0]
    for test in tests[1:]:
        guard = BinOp("or", guard, test)
    return guard


def _node_reaction(
    graph: DataflowGraph, node: Node, labels: Mapping[str, str], tag: Var | Num
) -> Reaction:
    inputs = graph.inputs(node.id)

    def outs(port: str = "out") -> list[str]:
        edges = sorted(graph.outputs(node.id, port), key=lambda e: e.label)
        return [labels[e.label] for e in edges]

    def emit(
        value: Expr, port: str = "out", out_tag: Expr = tag, guard: Expr | None = None
    ) -> ByClause:
        targets = outs(port)
        if not targets:
            return ByClause(guard=guard, is_null=True)
        outputs = tuple(Output(value, LabelLit(t), out_tag) for t in targets)
        return ByClause(outputs=outputs, guard=guard)

    def pattern(var: str, edge: Edge) -> Pattern:
        return Pattern(Var(var), LabelLit(labels[edge.label]), tag)

    match node.kind:
        case NodeKind.ARITH | NodeKind.COMPARE:
            assert node.op is not None
            if node.literal is None:
                patterns = (pattern("id1", inputs[0]), pattern("id2", inputs[1]))
                expr = BinOp(node.op, Var("id1"), Var("id2"))
            else:
                patterns = (pattern("id1", inputs[0]),)
                constant, operand = Num(node.literal), Var("id1")
                left, right = (constant, operand) if node.literal_left else (operand, constant)
                expr = BinOp(node.op, left, right)
            if node.kind is NodeKind.ARITH:
                clauses: tuple[ByClause, ...] = (emit(expr),)
            else:
                clauses = (emit(Num(1), guard=expr), emit(Num(0)))
        case NodeKind.STEER:
            patterns = (pattern("id1", inputs[0]), pattern("id2", inputs[1]))
            control = BinOp("==", Var("id2"), Num(1))
            clauses = (emit(Var("id1"), "true", guard=control), emit(Var("id1"), "false"))
        case NodeKind.INCTAG:
            alternatives = sorted(labels[e.label] for e in inputs)
            bumped = BinOp("+", tag, Num(1))
            if len(alternatives) == 1:
                patterns = (Pattern(Var("id1"), LabelLit(alternatives[0]), tag),)
                clauses = (emit(Var("id1"), out_tag=bumped),)
            else:
                patterns = (Pattern(Var("id1"), Var("x"), tag),)
                clauses = (emit(Var("id1"), out_tag=bumped, guard=_any_of("x", alternatives)),)
        case _:  # pragma: no cover - sources and sinks are skipped by the caller
            raise ConversionError(f"node {node.id} of kind {node.kind} has no reaction")
    return Reaction(name=node.id, replace=patterns, by=clauses)


def dataflow_to_gamma(
    graph: DataflowGraph,
    inputs: Iterable[Element] = (),
    *,
    overrides: Mapping[str, int] | None = None,
    relabel: bool = False,
) -> tuple[Program, ConversionReport]:
    """Convert a dataflow graph into an equivalent Gamma program.

    Each operator node becomes one reaction named after the node: Arith nodes
    an unguarded clause per output label, Compare nodes a ``1`` clause under
    the comparison and a ``0`` else-clause, Steer nodes a clause on
    ``id2 == 1`` for the true port and an else-clause for the false port
    (``by 0`` when a port has no edges), and Inctag nodes a clause producing
    tag ``v+1``. Source tokens become the initial multiset at tag 0; Sink
    input labels are terminal and never consumed.

    Graphs without Inctag nodes never leave tag 0, so their reactions use
    the literal tag ``0``; graphs with loops use the tag variable ``v``.

    Args:
        graph: Graph to convert.
        inputs: Source tokens (see ``resolve_inputs``).
        overrides: Source values keyed by node id.
        relabel: Emit generated ``n<node>_o<k>`` labels instead of the
            graph's edge labels.

    Returns:
        The program and a report carrying the label map and sink labels.

    Raises:
        GraphValidationError: If ``graph`` is invalid.
        InputError: If a Source has no value.
    """
    violations = validate_graph(graph)
    if violations:
        raise GraphValidationError(violations)
    tokens = resolve_inputs(graph, inputs, overrides)
    labels = _label_map(graph, relabel)
    looping = any(n.kind is NodeKind.INCTAG for n in graph.nodes)
    tag: Var | Num = Var("v") if looping else Num(0)

    reactions = tuple(
        _node_reaction(graph, node, labels, tag)
        for node in sorted(graph.nodes, key=lambda n: n.id)
        if node.kind not in (NodeKind.SOURCE, NodeKind.SINK)
    )
    initial = tuple(sorted(Element(value=t.value, label=labels[t.label], tag=0) for t in tokens))
    program = Program(reactions=reactions, initial=initial)
    report = ConversionReport(
        direction="df2gamma",
        source_summary=graph_summary(graph),
        target_summary=program_summary(program),
        label_map=labels,
        sink_labels=sorted(labels[label] for label in graph.sink_labels()),
    )
    logger.info("converted graph (%s) to %s", report.source_summary, report.target_summary)
    return program, report


# --- Gamma reaction -> dataflow ---


@dataclass(frozen=True)
class _Port:
    """An output port to draw edges from, with the label its first edge takes."""

    node: str
    port: str = "out"
    label: str | None = None


@dataclass
class _Fragment:
    """The graph built for one reaction, with its stitching points."""

    name: str
    nodes: list[Node] = field(default_factory=list)
    edges: list[Edge] = field(default_factory=list)
    # (source node id, Gamma label the source stands for)
    inputs: list[tuple[str, str | None]] = field(default_factory=list)
    # (sink node id, sink edge label, Gamma label produced)
    outputs: list[tuple[str, str, str]] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    increments_tag: bool = False
    _counters: Counter[str] = field(default_factory=Counter)
    _labels: set[str] = field(default_factory=set)

    def add(self, kind: NodeKind, stem: str, **fields: object) -> str:
        self._counters[stem] += 1
        node_id = f"{self.name}_{stem}{self._counters[stem]}"
        self.nodes.append(Node(id=node_id, kind=kind, **fields))  # type: ignore[arg-type]
        return node_id

    def fresh_label(self, wanted: str | None = None) -> str:
        if wanted is not None and wanted not in self._labels:
            self._labels.add(wanted)
            return wanted
        while True:
            self._counters["_e"] += 1
            label = f"{self.name}_e{self._counters['_e']}"
            if label not in self._labels:
                self._labels.add(label)
                return label

    def connect(self, source: _Port, consumer: str, slot: int = 0, label: str | None = None) -> str:
        chosen = self.fresh_label(label if label is not None else source.label)
        self.edges.append(
            Edge(label=chosen, producer=source.node, port=source.port, consumer=consumer, slot=slot)
        )
        return chosen

    def sink(self, source: _Port, gamma_label: str) -> None:
        sink_id = self.add(NodeKind.SINK, "sink")
        edge_label = self.connect(source, sink_id, label=gamma_label)
        self.outputs.append((sink_id, edge_label, gamma_label))

    def graph(self) -> DataflowGraph:
        return DataflowGraph(nodes=tuple(self.nodes), edges=tuple(self.edges))


def _tag_increment(expr: Expr, tag_var: str | None) -> bool:
    """``True`` for ``v+1``; ``False`` for ``v`` or a literal tag."""
    match expr:
        case Num():
            return False
        case Var(name) if name == tag_var:
            return False
        case BinOp("+", Var(name), Num(1)) | BinOp("+", Num(1), Var(name)) if name == tag_var:
            return True
    raise ConversionError(f"tag expression {expr} is neither the tag variable nor its increment")


def _check_value_expr(reaction: Reaction, expr: Expr) -> None:
    label_vars = set(reaction.label_vars())
    tag_vars = set(reaction.tag_vars())
    for sub in walk(expr):
        match sub:
            case BinOp(op, _, _) if op in BOOL_OPS:
                raise ConversionError(f"{reaction.name}: operator {op!r} has no dataflow node")
            case Not():
                raise ConversionError(f"{reaction.name}: operator 'not' has no dataflow node")
            case LabelLit(text):
                raise ConversionError(f"{reaction.name}: label {text!r} used as a value")
            case Var(name) if name in label_vars or name in tag_vars:
                raise ConversionError(f"{reaction.name}: variable {name} is not a value variable")


class _Compiler:
    """Builds Arith / Compare trees for expressions over a set of ports."""

    def __init__(self, fragment: _Fragment, ports: Mapping[str, _Port]) -> None:
        self.fragment = fragment
        self.ports = ports
        self.cache: dict[Expr, _Port] = {}
        self.wrapped: dict[Expr, _Port] = {}

    def compile(self, expr: Expr) -> _Port:
        if isinstance(expr, Var):
            return self.ports[expr.name]
        if expr not in self.cache:
            self.cache[expr] = self._build(expr)
        return self.cache[expr]

    def _build(self, expr: Expr) -> _Port:
        fragment = self.fragment
        match expr:
            case BinOp(op, left, right) if op in ARITH_OPS or op in COMPARE_OPS:
                kind = NodeKind.ARITH if op in ARITH_OPS else NodeKind.COMPARE
                if isinstance(left, Num) and isinstance(right, Num):
                    raise ConversionError(
                        f"{fragment.name}: constant operation {expr} has no input"
                    )
                if isinstance(right, Num) or isinstance(left, Num):
                    literal_left = isinstance(left, Num)
                    constant = left if literal_left else right
                    operand = right if literal_left else left
                    node_id = fragment.add(
                        kind,
                        OP_NAMES[op],
                        op=op,
                        literal=constant.value,  # type: ignore[union-attr]
                        literal_left=literal_left,
                    )
                    fragment.connect(self.compile(operand), node_id, 0)
                else:
                    node_id = fragment.add(kind, OP_NAMES[op], op=op)
                    fragment.connect(self.compile(left), node_id, 0)
                    fragment.connect(self.compile(right), node_id, 1)
                return _Port(node_id)
        raise ConversionError(f"{fragment.name}: expression {expr} has no dataflow node")

    def value(self, expr: Expr, anchor: _Port) -> _Port:
        """Port carrying ``expr``; bare variables and constants get a node of their own."""
        expr = fold(expr)
        if not isinstance(expr, Var | Num):
            return self.compile(expr)
        if expr not in self.wrapped:
            if isinstance(expr, Var):
                node_id = self.fragment.add(NodeKind.ARITH, "copy", op="+", literal=0)
                self.fragment.connect(self.compile(expr), node_id)
            else:
                zero = self.fragment.add(NodeKind.ARITH, "zero", op="*", literal=0)
                self.fragment.connect(anchor, zero)
                node_id = self.fragment.add(NodeKind.ARITH, "const", op="+", literal=expr.value)
                self.fragment.connect(_Port(zero), node_id)
            self.wrapped[expr] = _Port(node_id)
        return self.wrapped[expr]


def _emit_outputs(
    fragment: _Fragment, reaction: Reaction, compiler: _Compiler, clause: ByClause, anchor: _Port
) -> None:
    for output in clause.outputs:
        if not isinstance(output.label, LabelLit):
            raise ConversionError(f"{reaction.name}: output labels must be literals")
        _check_value_expr(reaction, output.value)
        port = compiler.value(output.value, anchor)
        if _tag_increment(output.tag, reaction.tag_var):
            fragment.increments_tag = True
            inctag = fragment.add(NodeKind.INCTAG, "inctag")
            fragment.connect(port, inctag)
            port = _Port(inctag)
        fragment.sink(port, output.label.text)


def _sources(fragment: _Fragment, reaction: Reaction) -> dict[str, _Port]:
    ports: dict[str, _Port] = {}
    for pattern in reaction.replace:
        if isinstance(pattern.value, Num):
            raise ConversionError(f"{reaction.name}: literal value patterns have no dataflow node")
        gamma_label = pattern.label.text if isinstance(pattern.label, LabelLit) else None
        if gamma_label is None:
            _warn(
                fragment.warnings,
                f"{reaction.name}: pattern on label variable {getattr(pattern.label, 'name', '?')}"
                " gets a generated edge label",
            )
        node_id = fragment.add(NodeKind.SOURCE, "src")
        fragment.inputs.append((node_id, gamma_label))
        ports[pattern.value.name] = _Port(node_id, label=gamma_label)
    return ports


def _is_negation(guard: Expr, other: Expr | None) -> bool:
    if other is None:
        return True
    if other == Not(guard):
        return True
    return (
        isinstance(guard, BinOp)
        and guard.op in NEGATED
        and other == BinOp(NEGATED[guard.op], guard.left, guard.right)
    )


def _inctag_shape(reaction: Reaction) -> list[str] | None:
    """Alternative input labels if ``reaction`` is a plain tag increment."""
    if reaction.arity != 1 or len(reaction.by) != 1:
        return None
    pattern, clause = reaction.replace[0], reaction.by[0]
    if not isinstance(pattern.value, Var) or not isinstance(pattern.tag, Var) or clause.is_null:
        return None
    bumped = BinOp("+", pattern.tag, Num(1))
    if not all(
        o.value == pattern.value and o.tag == bumped and isinstance(o.label, LabelLit)
        for o in clause.outputs
    ):
        return None
    if isinstance(pattern.label, LabelLit):
        return [pattern.label.text] if clause.guard is None else None
    allowed = guard_label_literals(reaction, pattern.label.name)
    return sorted(allowed) if allowed else None


def _compare_shape(reaction: Reaction) -> bool:
    """``True`` for ``by [1, L..] if cmp`` followed by ``by [0, L..] else``."""
    if len(reaction.by) != 2:
        return False
    first, second = reaction.by
    guard = first.guard
    if not isinstance(guard, BinOp) or guard.op not in COMPARE_OPS:
        return False
    if not _is_negation(guard, second.guard):
        return False
    if first.is_null or second.is_null or len(first.outputs) != len(second.outputs):
        return False
    if not free_vars(guard) >= set(reaction.value_vars()):
        return False
    for yes, no in zip(first.outputs, second.outputs, strict=True):
        if yes.value != Num(1) or no.value != Num(0):
            return False
        if yes.label != no.label or yes.tag != no.tag or not isinstance(yes.label, LabelLit):
            return False
        try:
            if _tag_increment(yes.tag, reaction.tag_var):
                return False
        except ConversionError:
            return False
    return True


def _build_inctag(fragment: _Fragment, reaction: Reaction, alternatives: list[str]) -> None:
    inctag = fragment.add(NodeKind.INCTAG, "inctag")
    for label in alternatives:
        source = fragment.add(NodeKind.SOURCE, "src")
        fragment.inputs.append((source, label))
        fragment.connect(_Port(source), inctag, label=label)
    for output in reaction.by[0].outputs:
        fragment.sink(_Port(inctag), output.label.text)  # type: ignore[union-attr]
    fragment.increments_tag = True


def _build_compare(fragment: _Fragment, reaction: Reaction) -> None:
    compiler = _Compiler(fragment, _sources(fragment, reaction))
    guard = reaction.by[0].guard
    assert guard is not None
    _check_value_expr(reaction, guard)
    port = compiler.compile(guard)
    for output in reaction.by[0].outputs:
        fragment.sink(port, output.label.text)  # type: ignore[union-attr]


def _build_guarded(fragment: _Fragment, reaction: Reaction) -> None:
    if len(reaction.by) > 2:
        raise ConversionError(f"{reaction.name}: only two-way guarded reactions convert to steers")
    first = reaction.by[0]
    second = reaction.by[1] if len(reaction.by) == 2 else None
    guard = first.guard
    assert guard is not None
    if second is not None and not _is_negation(guard, second.guard):
        raise ConversionError(
            f"{reaction.name}: second clause guard is not the negation of the first"
        )
    if not isinstance(guard, BinOp) or guard.op not in COMPARE_OPS:
        raise ConversionError(f"{reaction.name}: guard {guard} is not a single comparison")
    _check_value_expr(reaction, guard)
    if second is None:
        _warn(
            fragment.warnings,
            f"{reaction.name}: elements failing the guard stay in the multiset"
            " but are discarded by the graph",
        )

    sources = _sources(fragment, reaction)
    control = _Compiler(fragment, sources).compile(guard)

    used: set[str] = set()
    for clause in (first, second):
        for output in clause.outputs if clause is not None else ():
            used |= free_vars(output.value)
    steered = [v for v in reaction.value_vars() if v in used] or reaction.value_vars()[:1]
    true_ports: dict[str, _Port] = {}
    false_ports: dict[str, _Port] = {}
    for var in steered:
        steer = fragment.add(NodeKind.STEER, "steer")
        fragment.connect(sources[var], steer, 0)
        fragment.connect(control, steer, 1)
        true_ports[var] = _Port(steer, "true")
        false_ports[var] = _Port(steer, "false")

    anchor = steered[0]
    _emit_outputs(fragment, reaction, _Compiler(fragment, true_ports), first, true_ports[anchor])
    if second is not None and not second.is_null:
        otherwise = _Compiler(fragment, false_ports)
        _emit_outputs(fragment, reaction, otherwise, second, false_ports[anchor])


def _build_fragment(reaction: Reaction) -> _Fragment:
    fragment = _Fragment(name=reaction.name)
    alternatives = _inctag_shape(reaction)
    if alternatives is not None:
        _build_inctag(fragment, reaction, alternatives)
    elif _compare_shape(reaction):
        _build_compare(fragment, reaction)
    elif reaction.is_guarded():
        _build_guarded(fragment, reaction)
    else:
        clause = reaction.by[0]
        sources = _sources(fragment, reaction)
        if not clause.is_null:
            anchor = sources[reaction.value_vars()[0]] if reaction.value_vars() else None
            if anchor is None:
                raise ConversionError(f"{reaction.name}: no value variable to anchor the outputs")
            _emit_outputs(fragment, reaction, _Compiler(fragment, sources), clause, anchor)

    # sources nothing reads drain into a sink of their own
    drained = {e.producer for e in fragment.edges}
    for source_id, gamma_label in list(fragment.inputs):
        if source_id not in drained:
            void = fragment.add(NodeKind.SINK, "void")
            fragment.connect(_Port(source_id, label=gamma_label), void)
    if fragment.increments_tag:
        _warn(
            fragment.warnings,
            f"{reaction.name}: tag increment rebuilt as an inctag node;"
            " the loop it closes is not recoverable",
        )
    return fragment


def gamma_reaction_to_dataflow(reaction: Reaction) -> tuple[DataflowGraph, ConversionReport]:
    """Build the dataflow graph of a single reaction.

    Node ids are prefixed with the reaction name. A Source edge carries the
    label its pattern matches and a Sink edge the label its output produces,
    unless that label is already taken inside the graph.

    Args:
        reaction: A valid reaction.

    Returns:
        The graph and a report whose ``terminal_map`` names the Gamma label
        behind each Sink edge.

    Raises:
        ConversionError: For operators without a node kind (``and``, ``or``,
            ``not``), label-variable outputs, tag expressions other than ``v``
            and ``v+1``, or guards that are not one two-way comparison.
    """
    fragment = _build_fragment(reaction)
    graph = fragment.graph()
    violations = validate_graph(graph)
    if violations:
        raise ConversionError(f"{reaction.name}: " + "; ".join(str(v) for v in violations))
    report = ConversionReport(
        direction="gamma2df",
        source_summary=f"reaction {reaction.name}",
        target_summary=graph_summary(graph),
        terminal_map={edge_label: gamma for _, edge_label, gamma in fragment.outputs},
        source_labels=list(fragment.inputs),
        sink_labels=sorted(graph.sink_labels()),
        warnings=fragment.warnings,
        non_round_trippable=[reaction.name] if fragment.increments_tag else [],
    )
    return graph, report


def gamma_to_dataflow(program: Program) -> tuple[DataflowGraph, ConversionReport]:
    """Rebuild one dataflow graph from a whole program.

    Per-reaction graphs are joined wherever a label is produced by exactly
    one output of one reaction and consumed by exactly one pattern of
    another: the producing Sink and the consuming Source disappear and the
    producer feeds the consumers directly. A Source whose label has exactly
    one element in the initial multiset takes that element's value; initial
    elements nothing consumes become Source-to-Sink pairs.

    Raises:
        ConversionError: If a reaction does not convert, or the joined graph
            has a cycle without a tag increment.
    """
    fragments = [_build_fragment(r) for r in program.reactions]
    warnings = [w for f in fragments for w in f.warnings]
    producers: dict[str, list[tuple[_Fragment, str]]] = defaultdict(list)
    consumers: dict[str, list[tuple[_Fragment, str]]] = defaultdict(list)
    sink_gamma: dict[str, str] = {}
    for fragment in fragments:
        for sink_id, _, gamma_label in fragment.outputs:
            producers[gamma_label].append((fragment, sink_id))
            sink_gamma[sink_id] = gamma_label
        for source_id, gamma_label in fragment.inputs:
            if gamma_label is not None:
                consumers[gamma_label].append((fragment, source_id))
    initial: dict[str, list[Element]] = defaultdict(list)
    for element in program.initial:
        initial[element.label].append(element)

    rewired: dict[str, tuple[str, str]] = {}  # source id -> producing (node, port)
    stitched: set[str] = set()
    for label in sorted(set(producers) & set(consumers)):
        if len(producers[label]) != 1 or len(consumers[label]) != 1 or label in initial:
            continue
        (maker, sink_id), (taker, source_id) = producers[label][0], consumers[label][0]
        if maker is taker:
            continue
        feed = next(e for e in maker.edges if e.consumer == sink_id)
        rewired[source_id] = (feed.producer, feed.port)
        stitched |= {sink_id, source_id}
        del sink_gamma[sink_id]

    values: dict[str, int] = {}
    for label, elements in sorted(initial.items()):
        takers = consumers.get(label, [])
        if len(takers) == 1 and len(elements) == 1 and label not in producers:
            values[takers[0][1]] = elements[0].value
        elif takers:
            _warn(
                warnings,
                f"label {label}: {len(elements)} initial elements for {len(takers)} consuming "
                "patterns; instantiate the reaction graphs instead",
            )

    nodes: list[Node] = []
    edges: list[Edge] = []
    for fragment in fragments:
        for node in fragment.nodes:
            if node.id in stitched:
                continue
            if node.id in values:
                node = node.model_copy(update={"value": values[node.id]})
            nodes.append(node)
        for edge in fragment.edges:
            if edge.consumer in stitched:
                continue
            if edge.producer in rewired:
                producer, port = rewired[edge.producer]
                edge = edge.model_copy(update={"producer": producer, "port": port})
            edges.append(edge)

    unconsumed = [
        e for label, els in sorted(initial.items()) if label not in consumers for e in els
    ]
    for index, element in enumerate(unconsumed, start=1):
        source_id, sink_id = f"init_src{index}", f"init_sink{index}"
        nodes += [
            Node(id=source_id, kind=NodeKind.SOURCE, value=element.value),
            Node(id=sink_id, kind=NodeKind.SINK),
        ]
        edges.append(Edge(label=element.label, producer=source_id, consumer=sink_id))
        sink_gamma[sink_id] = element.label

    edges = _dedupe_labels(edges)
    graph = DataflowGraph(nodes=tuple(nodes), edges=tuple(edges))
    violations = validate_graph(graph)
    if violations:
        raise ConversionError("; ".join(str(v) for v in violations))
    terminal_map = {e.label: sink_gamma[e.consumer] for e in edges if e.consumer in sink_gamma}
    report = ConversionReport(
        direction="gamma2df",
        source_summary=program_summary(program),
        target_summary=graph_summary(graph),
        terminal_map=terminal_map,
        sink_labels=sorted(terminal_map),
        warnings=warnings,
        non_round_trippable=[f.name for f in fragments if f.increments_tag],
    )
    logger.info("rebuilt %s as graph (%s)", report.source_summary, report.target_summary)
    return graph, report


def _dedupe_labels(edges: list[Edge]) -> list[Edge]:
    """Prefix repeated edge labels with the producing reaction's name."""
    taken: set[str] = set()
    result: list[Edge] = []
    for edge in edges:
        label = edge.label
        if label in taken:
            stem = f"{edge.producer.rsplit('_', 1)[0]}_{edge.label}"
            label, suffix = stem, 1
            while label in taken:
                suffix += 1
                label = f"{stem}_{suffix}"
            edge = edge.model_copy(update={"label": label})
        taken.add(label)
        result.append(edge)
    return result


# --- instantiation ---


def _default_source_labels(graph: DataflowGraph) -> list[tuple[str, str | None]]:
    labels: list[tuple[str, str | None]] = []
    for source in graph.sources():
        out = graph.outputs(source.id)
        labels.append((source.id, out[0].label if out else None))
    return labels


def _take(pool: list[Element], label: str | None) -> Element | None:
    for index, element in enumerate(pool):
        if label is None or element.label == label:
            return pool.pop(index)
    return None


def _deal(
    pool: list[Element], source_labels: Sequence[tuple[str, str | None]]
) -> dict[str, Element] | None:
    """One label-consistent assignment taken from ``pool``, or ``None``.

    Sources with a fixed label are served before label-variable ones so the
    latter cannot take an element a fixed Source needs. ``pool`` is only
    consumed when the assignment succeeds.
    """
    trial = list(pool)
    dealt: dict[str, Element] = {}
    fixed = [s for s in source_labels if s[1] is not None]
    ordered = fixed + [s for s in source_labels if s[1] is None]
    for source_id, label in ordered:
        element = _take(trial, label)
        if element is None:
            return None
        dealt[source_id] = element
    pool[:] = trial
    return dealt


def instantiate_for_multiset(
    graph: DataflowGraph,
    multiset: Iterable[Element],
    terminal_map: Mapping[str, str] | None = None,
    *,
    source_labels: Sequence[tuple[str, str | None]] | None = None,
) -> tuple[DataflowGraph, ConversionReport]:
    """Replicate a reaction graph so its Sources cover a multiset.

    Each copy deals one element to every Source, taking the smallest
    remaining element whose label the Source accepts. Copies are made until
    some Source cannot be served; what remains is reported as leftovers.
    Node ids and labels of copy ``i`` get the suffix ``_i<i>``. Produced
    elements are not fed into further copies.

    Args:
        graph: Graph of one reaction, as built by
            ``gamma_reaction_to_dataflow``.
        multiset: Elements to cover.
        terminal_map: Sink label to Gamma label map of ``graph``.
        source_labels: Source ids in pattern order with the Gamma label each
            accepts (``None`` for any), as in ``ConversionReport.source_labels``.
            By default Sources are taken in graph order and accept the label
            of their outgoing edge.

    Returns:
        The replicated graph and a report with the instance count and the
        elements left over.
    """
    wanted = list(source_labels) if source_labels is not None else _default_source_labels(graph)
    pool = sorted(multiset)
    base_terminals = dict(terminal_map or {})

    nodes: list[Node] = []
    edges: list[Edge] = []
    terminals: dict[str, str] = {}
    sink_labels = set(graph.sink_labels())
    copies = 0
    while wanted and (dealt := _deal(pool, wanted)) is not None:
        copies += 1
        suffix = f"_i{copies}"
        for node in graph.nodes:
            update: dict[str, object] = {"id": node.id + suffix}
            if node.id in dealt:
                update["value"] = dealt[node.id].value
            nodes.append(node.model_copy(update=update))
        for edge in graph.edges:
            label = edge.label + suffix
            edges.append(
                edge.model_copy(
                    update={
                        "label": label,
                        "producer": edge.producer + suffix,
                        "consumer": edge.consumer + suffix,
                    }
                )
            )
            if edge.label in sink_labels:
                terminals[label] = base_terminals.get(edge.label, edge.label)

    leftovers = pool
    result = DataflowGraph(nodes=tuple(nodes), edges=tuple(edges))
    report = ConversionReport(
        direction="gamma2df",
        source_summary=graph_summary(graph),
        target_summary=graph_summary(result),
        terminal_map=terminals,
        sink_labels=sorted(result.sink_labels()),
        instances=copies,
        leftovers=leftovers,
    )
    if leftovers:
        _warn(
            report.warnings,
            f"{len(leftovers)} element(s) left over after {copies} instance(s): "
            + ", ".join(str(e) for e in leftovers),
        )
    logger.info("instantiated %d copies covering %d elements", copies, copies * len(wanted))
    return result, report


# --- fusion ---


def _renumber(reaction: Reaction) -> Reaction:
    return replace(canonical_reaction(reaction), name=reaction.name)


def accepts_label(reaction: Reaction, pattern: Pattern, label: str) -> bool:
    """``True`` if ``pattern`` of ``reaction`` can match an element labelled ``label``.

    A label variable restricted by ``x == 'L'`` guards accepts only those
    labels; an unrestricted one accepts any label.
    """
    if isinstance(pattern.label, LabelLit):
        return pattern.label.text == label
    allowed = guard_label_literals(reaction, pattern.label.name)
    return allowed is None or label in allowed


def _consumers_of(reactions: list[Reaction], label: str) -> list[tuple[int, int]]:
    return [
        (r_index, p_index)
        for r_index, reaction in enumerate(reactions)
        for p_index, pattern in enumerate(reaction.replace)
        if accepts_label(reaction, pattern, label)
    ]


def _fusable(reactions: list[Reaction], initial_labels: set[str]) -> tuple[int, int, int] | None:
    literal_outputs = all(
        isinstance(o.label, LabelLit) for r in reactions for c in r.by for o in c.outputs
    )
    if not literal_outputs:
        return None
    for p_index, producer in enumerate(reactions):
        if len(producer.by) != 1:
            continue
        clause = producer.by[0]
        if clause.guard is not None or clause.is_null or len(clause.outputs) != 1:
            continue
        label = clause.outputs[0].label.text  # type: ignore[union-attr]
        if label in initial_labels:
            continue
        if any(label in produced_labels(r) for i, r in enumerate(reactions) if i != p_index):
            continue
        consumers = _consumers_of(reactions, label)
        if len(consumers) != 1:
            continue
        c_index, pattern_index = consumers[0]
        consumer = reactions[c_index]
        pattern = consumer.replace[pattern_index]
        if c_index == p_index or consumer.is_guarded() or len(consumer.by) != 1:
            continue
        if not isinstance(pattern.label, LabelLit) or not isinstance(pattern.value, Var):
            continue
        if _tag_plan(producer, pattern) is None:
            continue
        return p_index, c_index, pattern_index
    return None


def _tag_plan(producer: Reaction, pattern: Pattern) -> dict[str, Expr] | None:
    """Substitutions that make the producer's output tag meet the consumer pattern."""
    produced = producer.by[0].outputs[0].tag
    match produced, pattern.tag:
        case Num(a), Num(b):
            return {} if a == b else None
        case Var(name), Var(_) if name == producer.tag_var:
            return {name: pattern.tag}
        case Var(name), Num() if name == producer.tag_var:
            return {name: pattern.tag}
        case Num(), Var(_):
            return {}
    return None


def _fuse(producer: Reaction, consumer: Reaction, pattern_index: int) -> Reaction:
    pattern = consumer.replace[pattern_index]
    assert isinstance(pattern.value, Var)
    taken = set(consumer.value_vars()) | set(consumer.label_vars()) | set(consumer.tag_vars())

    renames: dict[str, Expr] = {}
    for var in producer.value_vars() + producer.label_vars():
        fresh = f"{producer.name}_{var}"
        while fresh in taken:
            fresh += "_"
        renames[var] = Var(fresh)
    renames.update(_tag_plan(producer, pattern) or {})

    consumer_subst: dict[str, Expr] = {}
    produced_tag = producer.by[0].outputs[0].tag
    if isinstance(produced_tag, Num) and isinstance(pattern.tag, Var):
        consumer_subst[pattern.tag.name] = produced_tag

    def rename(expr: Expr) -> Expr:
        return substitute(expr, renames)

    inner = tuple(
        Pattern(rename(p.value), rename(p.label), rename(p.tag))  # type: ignore[arg-type]
        for p in producer.replace
    )
    value = rename(producer.by[0].outputs[0].value)
    consumer_subst[pattern.value.name] = value

    def inline(expr: Expr) -> Expr:
        return substitute(expr, consumer_subst)

    outer = [
        Pattern(p.value, p.label, inline(p.tag))  # type: ignore[arg-type]
        for p in consumer.replace
    ]
    patterns = tuple(outer[:pattern_index]) + inner + tuple(outer[pattern_index + 1 :])
    clauses = tuple(
        replace(
            c,
            outputs=tuple(
                Output(inline(o.value), inline(o.label), inline(o.tag)) for o in c.outputs
            ),
        )
        for c in consumer.by
    )
    return _renumber(Reaction(name=consumer.name, replace=patterns, by=clauses))


def fuse_chain(program: Program) -> Program:
    """Merge producer reactions into their only consumer, to a fixpoint.

    A reaction fuses into another when it is unguarded and produces a single
    element whose label no other reaction produces, no initial element
    carries, and exactly one pattern of one other unguarded reaction
    consumes. The producer's patterns replace the consumed pattern and its
    output expression replaces the consumed variable. Variables of the
    fused reaction are renumbered ``id1..idn`` in pattern order.

    Args:
        program: A valid program.

    Returns:
        The fused program; programs with nothing to fuse come back equal.
    """
    reactions = list(program.reactions)
    initial_labels = {e.label for e in program.initial}
    fused = 0
    while (found := _fusable(reactions, initial_labels)) is not None:
        p_index, c_index, pattern_index = found
        reactions[c_index] = _fuse(reactions[p_index], reactions[c_index], pattern_index)
        del reactions[p_index]
        fused += 1
    if fused:
        logger.info("fused %d reaction(s); %d remain", fused, len(reactions))
    return Program(reactions=tuple(reactions), initial=program.initial)
