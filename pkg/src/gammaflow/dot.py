"""GraphViz DOT export for dataflow graphs.

Shapes follow the usual drawing conventions for dynamic dataflow: sources are
squares, steers triangles and inctags lozenges; every other node is an
ellipse. Each edge carries its label, and edges leaving a steer are marked
``T`` / ``F`` at the tail.
"""

from __future__ import annotations

from graphviz import Digraph

from gammaflow.dataflow import DataflowGraph, NodeKind

_SHAPES = {
    NodeKind.SOURCE: "box",
    NodeKind.STEER: "triangle",
    NodeKind.INCTAG: "diamond",
}


def export_dot(graph: DataflowGraph, name: str = "dataflow") -> str:
    """Render ``graph`` as DOT source text.

    Args:
        graph: The graph to draw.
        name: Name of the emitted ``digraph``.

    Returns:
        DOT text; nodes and edges appear in canonical (sorted) order so the
        output is reproducible.
    """
    canon = graph.canonical()
    dot = Digraph(name=name)
    for node in canon.nodes:
        dot.node(
            node.id,
            label=f"{node.id}\\n{node.describe()}",
            shape=_SHAPES.get(node.kind, "ellipse"),
        )
    for edge in canon.edges:
        attrs = {"label": edge.label}
        if edge.port in ("true", "false"):
            attrs["taillabel"] = "T" if edge.port == "true" else "F"
        dot.edge(edge.producer, edge.consumer, **attrs)
    return dot.source
