"""Unit tests for the dataflow graph IR and its validator."""


def _graph(*lines: str):
    from gammaflow.dataflow import DataflowGraph, Edge, Node

    nodes, edges = [], []
    for line in lines:
        kind, *rest = line.split()
        if kind == "node":
            node_id, node_kind, *extra = rest
            fields = {"op": extra[0]} if extra else {}
            nodes.append(Node(id=node_id, kind=node_kind, **fields))
        else:
            label, producer, port, consumer, slot = rest
            edges.append(
                Edge(label=label, producer=producer, port=port, consumer=consumer, slot=int(slot))
            )
    return DataflowGraph(nodes=tuple(nodes), edges=tuple(edges))


# --- valid graphs ---


def test_example1_fixture_is_valid():
    """The straight-line fixture should have no violations."""
    from gammaflow.dataflow import validate_graph
    from gammaflow.fixtures import read_fixture
    from gammaflow.graph_text import parse_graph_text

    graph = parse_graph_text(read_fixture("example1.df"))
    assert validate_graph(graph) == []
    assert graph.sink_labels() == ["m"]


def test_loop_through_inctag_is_allowed():
    """A cycle that passes through an inctag is not a violation."""
    from gammaflow.dataflow import validate_graph
    from gammaflow.fixtures import read_fixture
    from gammaflow.graph_text import parse_graph_text

    graph = parse_graph_text(read_fixture("example2.df"))
    assert validate_graph(graph) == []
    assert graph.kind_counts() == {
        "source": 3,
        "arith": 2,
        "compare": 1,
        "steer": 3,
        "inctag": 3,
        "sink": 1,
    }


def test_empty_graph_is_valid():
    """A graph with no nodes breaks no invariant."""
    from gammaflow.dataflow import DataflowGraph, validate_graph

    assert validate_graph(DataflowGraph(nodes=(), edges=())) == []


# --- violations ---


def test_untagged_cycle_is_reported():
    """A cycle made only of arith nodes should be an untagged-cycle violation."""
    from gammaflow.dataflow import validate_graph

    graph = _graph(
        "node a source",
        "node p arith +",
        "node q arith +",
        "node o sink",
        "edge e1 a out p 0",
        "edge e2 q out p 1",
        "edge e3 p out q 0",
        "edge e4 a out q 1",
        "edge e5 q out o 0",
    )
    kinds = {v.kind for v in validate_graph(graph)}
    assert "untagged-cycle" in kinds


def test_arith_with_one_input_is_an_arity_violation():
    """A binary arith node fed on one slot only should be reported by node id."""
    from gammaflow.dataflow import validate_graph

    graph = _graph(
        "node a source",
        "node p arith +",
        "node o sink",
        "edge e1 a out p 0",
        "edge e2 p out o 0",
    )
    violations = validate_graph(graph)
    assert [(v.kind, v.subject) for v in violations] == [("arity", "p")]


def test_duplicate_labels_and_dangling_edges_are_reported():
    """Repeated labels and edges to unknown nodes should both be reported."""
    from gammaflow.dataflow import validate_graph

    graph = _graph(
        "node a source",
        "node o sink",
        "edge e a out o 0",
        "edge e a out ghost 0",
    )
    kinds = {(v.kind, v.subject) for v in validate_graph(graph)}
    assert ("duplicate-label", "e") in kinds
    assert ("dangling-edge", "e") in kinds


def test_unknown_steer_port_is_reported():
    """Only true and false are output ports of a steer."""
    from gammaflow.dataflow import validate_graph

    graph = _graph(
        "node a source",
        "node c source",
        "node s steer",
        "node o sink",
        "edge d a out s 0",
        "edge k c out s 1",
        "edge x s maybe o 0",
    )
    assert ("port", "x") in {(v.kind, v.subject) for v in validate_graph(graph)}


def test_unknown_operator_is_reported():
    """An arith node with a comparison operator is invalid."""
    from gammaflow.dataflow import validate_graph

    graph = _graph(
        "node a source",
        "node b source",
        "node p arith <",
        "node o sink",
        "edge e1 a out p 0",
        "edge e2 b out p 1",
        "edge e3 p out o 0",
    )
    assert ("operator", "p") in {(v.kind, v.subject) for v in validate_graph(graph)}


# --- helpers ---


def test_edge_signature_ignores_node_ids():
    """Renaming nodes should not change the edge signature."""
    from gammaflow.fixtures import read_fixture
    from gammaflow.graph_text import parse_graph_text

    text = read_fixture("example1.df")
    renamed = text.replace("R1", "ADD").replace("R3", "SUB")
    assert parse_graph_text(text).edge_signature() == parse_graph_text(renamed).edge_signature()


def test_node_describe():
    """describe() should show the operator and any literal operand."""
    from gammaflow.dataflow import Node, NodeKind

    assert Node(id="n", kind=NodeKind.ARITH, op="-", literal=1).describe() == "- 1"
    node = Node(id="n", kind=NodeKind.COMPARE, op="<", literal=3, literal_left=True)
    assert node.describe() == "3 <"
    assert Node(id="n", kind=NodeKind.SOURCE, value=4).describe() == "source 4"
    assert Node(id="n", kind=NodeKind.STEER).describe() == "steer"
