"""Unit tests for the graph text format and DOT export."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st


# --- parse_graph_text ---


def test_parse_example1_nodes_and_edges():
    """The fixture should parse with its sources valued and slots resolved."""
    from gammaflow.fixtures import read_fixture
    from gammaflow.graph_text import parse_graph_text

    graph = parse_graph_text(read_fixture("example1.df"))
    nodes = graph.node_map()
    edges = graph.edge_map()
    assert nodes["S_B"].value == 5
    assert nodes["R3"].op == "-"
    assert (edges["C2"].producer, edges["C2"].consumer, edges["C2"].slot) == ("R2", "R3", 1)


def test_parse_steer_slots_and_literal_operands():
    """Steer slots may be named data/control; operands may be literal."""
    from gammaflow.fixtures import read_fixture
    from gammaflow.graph_text import parse_graph_text

    graph = parse_graph_text(read_fixture("example2.df"))
    edges = graph.edge_map()
    nodes = graph.node_map()
    assert edges["B14"].slot == 1
    assert edges["A12"].slot == 0
    assert edges["C14"].port == "false"
    assert (nodes["R18"].literal, nodes["R18"].literal_left) == (1, False)


def test_syntax_error_reports_line_and_column():
    """Malformed lines should raise GraphSyntaxError with a location."""
    from gammaflow.errors import GraphSyntaxError
    from gammaflow.graph_text import parse_graph_text

    with pytest.raises(GraphSyntaxError) as excinfo:
        parse_graph_text("node a source 1\nnode b frobnicate\n")
    assert excinfo.value.line == 2
    assert excinfo.value.column > 0
    assert "line 2" in str(excinfo.value)


def test_builder_failure_becomes_a_syntax_error(monkeypatch):
    """An exception raised while building nodes surfaces as ``GraphSyntaxError``."""
    from gammaflow.errors import GraphSyntaxError
    from gammaflow.graph_text import _GraphBuilder, parse_graph_text

    def explode(self, children):
        raise ValueError("boom")

    monkeypatch.setattr(_GraphBuilder, "sink", explode)
    with pytest.raises(GraphSyntaxError, match="boom"):
        parse_graph_text("node a source 1\nnode o sink\nedge e a o\n")


def test_duplicate_node_is_a_validation_error():
    """Declaring a node twice should be rejected with both line numbers."""
    from gammaflow.errors import GraphValidationError
    from gammaflow.graph_text import parse_graph_text

    text = "node a source 1\nnode a source 2\nnode o sink\nedge e a o\n"
    with pytest.raises(GraphValidationError) as excinfo:
        parse_graph_text(text)
    assert excinfo.value.violations[0].kind == "duplicate-node"
    assert "lines 1 and 2" in excinfo.value.violations[0].message


def test_invalid_graph_is_rejected():
    """A structurally broken graph should not parse."""
    from gammaflow.errors import GraphValidationError
    from gammaflow.graph_text import parse_graph_text

    with pytest.raises(GraphValidationError, match="arity"):
        parse_graph_text("node a source 1\nnode p arith +\nnode o sink\nedge e a p.0\nedge f p o\n")


# --- serialize_graph ---


def test_serialize_is_canonical():
    """Declaration order should not affect the serialised text."""
    from gammaflow.graph_text import parse_graph_text, serialize_graph

    a = "node o sink\nnode s source 3\nedge z s o\n"
    b = "# same graph\nnode s source 3\n\nnode o sink\nedge z s o"
    assert serialize_graph(parse_graph_text(a)) == serialize_graph(parse_graph_text(b))
    assert serialize_graph(parse_graph_text(a)) == "node o sink\nnode s source 3\n\nedge z s o\n"


def test_serialize_then_parse_preserves_example2():
    """Serialised text should parse back to the same canonical graph."""
    from gammaflow.fixtures import read_fixture
    from gammaflow.graph_text import parse_graph_text, serialize_graph

    graph = parse_graph_text(read_fixture("example2.df"))
    again = parse_graph_text(serialize_graph(graph))
    assert again.canonical() == graph.canonical()


def test_empty_text_is_the_empty_graph():
    """Empty text parses to a graph that serializes back to empty text."""
    from gammaflow.graph_text import parse_graph_text, serialize_graph

    graph = parse_graph_text("# nothing here\n")
    assert graph.nodes == () and graph.edges == ()
    assert serialize_graph(graph) == ""
    assert parse_graph_text(serialize_graph(graph)) == graph


_OPS = st.sampled_from(["+", "-", "*", "/"])


@st.composite
def _chain_lines(draw):
    """Lines of a random expression chain: ``s0 op s1 op s2 ... -> out``."""
    steps = draw(st.lists(st.tuples(_OPS, st.integers(-99, 99)), min_size=1, max_size=6))
    lines = [f"node s0 source {draw(st.integers(-99, 99))}", "node out sink"]
    previous = "s0"
    for index, (op, value) in enumerate(steps, start=1):
        lines.append(f"node s{index} source {value}")
        lines.append(f"node n{index} arith {op}")
        lines.append(f"edge a{index} {previous} n{index}.0")
        lines.append(f"edge b{index} s{index} n{index}.1")
        previous = f"n{index}"
    lines.append(f"edge r {previous} out")
    return lines


@settings(max_examples=40, deadline=None)
@given(data=st.data())
def test_generated_chains_serialize_the_same_in_any_line_order(data):
    """Canonical text is independent of declaration order and parses back to the same graph."""
    from gammaflow.graph_text import parse_graph_text, serialize_graph

    lines = data.draw(_chain_lines())
    shuffled = data.draw(st.permutations(lines))
    text = serialize_graph(parse_graph_text("\n".join(lines)))
    assert serialize_graph(parse_graph_text("\n".join(shuffled))) == text
    assert serialize_graph(parse_graph_text(text)) == text


def test_graph_summary_counts_operators():
    """The summary should count the nine operator nodes of the loop."""
    from gammaflow.fixtures import read_fixture
    from gammaflow.graph_text import graph_summary, parse_graph_text

    summary = graph_summary(parse_graph_text(read_fixture("example2.df")))
    assert summary.startswith("13 nodes (9 operators;")
    assert summary.endswith("17 edges")


# --- export_dot ---


def test_export_dot_shapes_and_labels():
    """Sources are boxes, steers triangles, inctags diamonds; edges are labelled."""
    from gammaflow.dot import export_dot
    from gammaflow.fixtures import read_fixture
    from gammaflow.graph_text import parse_graph_text

    dot = export_dot(parse_graph_text(read_fixture("example2.df")), name="loop")
    assert dot.startswith("digraph loop {")
    assert "S_Y [label=" in dot and "shape=box" in dot
    assert "shape=triangle" in dot
    assert "shape=diamond" in dot
    assert "label=C14" in dot
    assert "taillabel=F" in dot


def test_export_dot_is_reproducible():
    """Two exports of the same graph should be identical."""
    from gammaflow.dot import export_dot
    from gammaflow.fixtures import read_fixture
    from gammaflow.graph_text import parse_graph_text

    graph = parse_graph_text(read_fixture("example1.df"))
    assert export_dot(graph) == export_dot(graph)


def test_export_dot_of_the_empty_graph():
    """An empty graph still renders as a digraph."""
    from gammaflow.dataflow import DataflowGraph
    from gammaflow.dot import export_dot

    dot = export_dot(DataflowGraph(nodes=(), edges=()))
    assert "digraph" in dot
    assert "->" not in dot
