"""FastMCP tools for parsing, converting and drawing programs.

Registers the following tools on a ``FastMCP`` instance via ``register_tools()``:

- ``parse_source``: canonical form of graph, Gamma or multiset text
- ``convert_source``: dataflow to Gamma, or Gamma to dataflow graphs
- ``export_dot_source``: GraphViz DOT for a graph or a program's reactions
"""

from __future__ import annotations

import logging
from typing import Any

from mcp.server.fastmcp import FastMCP
from mcp.types import ToolAnnotations

from gammaflow import pipeline
from gammaflow.element_text import parse_elements, parse_tokens
from gammaflow.tools import source_kind, tool_errors

logger = logging.getLogger(__name__)


async def parse_source(text: str, kind: str = "gamma") -> dict[str, Any]:
    """Parse graph, Gamma or multiset text and return its canonical form.

    Args:
        text: Source text.
        kind: ``graph``, ``gamma`` or ``multiset``. Defaults to ``gamma``.

    Returns:
        Object with ``kind``, a one-line ``summary`` and the ``canonical`` text.

    Raises:
        ToolError: On syntax errors (with line and column) or validation
            violations.
    """
    with tool_errors():
        return pipeline.parse_source(text, source_kind(kind)).model_dump(mode="json")


async def convert_source(
    text: str,
    kind: str = "graph",
    fuse: bool = False,
    instantiate: bool = False,
    whole: bool = False,
    inputs: str | None = None,
    multiset: str | None = None,
) -> dict[str, Any]:
    """Convert a dataflow graph to Gamma, or a Gamma program to dataflow graphs.

    Args:
        text: Graph text (``kind=graph``) or Gamma text (``kind=gamma``).
        kind: Kind of ``text``; selects the direction. Defaults to ``graph``.
        fuse: Merge chains of reactions into single reactions.
        instantiate: Replicate each reaction graph to cover the multiset.
        whole: Rebuild one graph for the whole Gamma program.
        inputs: Optional inputs text (``token <value> <label> <tag>`` lines).
        multiset: Optional multiset text to instantiate over.

    Returns:
        Object with ``direction``, produced ``files`` (name to text) and the
        conversion ``reports``.

    Raises:
        ToolError: If the text does not parse or has no conversion.
    """
    with tool_errors():
        result = pipeline.convert_source(
            text,
            source_kind(kind),
            fuse=fuse,
            instantiate=instantiate,
            whole=whole,
            inputs=parse_tokens(inputs) if inputs else (),
            multiset=parse_elements(multiset) if multiset is not None else None,
        )
    logger.info("converted %s text: %d file(s)", kind, len(result.files))
    return result.model_dump(mode="json")


async def export_dot_source(
    text: str, kind: str = "graph", reaction: str | None = None, whole: bool = False
) -> str:
    """Render a graph, or the graphs of a program's reactions, as DOT.

    Args:
        text: Graph or Gamma text.
        kind: ``graph`` or ``gamma``. Defaults to ``graph``.
        reaction: For Gamma text, draw only this reaction.
        whole: For Gamma text, draw the graph rebuilt from the whole program.

    Returns:
        DOT source text.

    Raises:
        ToolError: If the text does not parse or ``reaction`` is unknown.
    """
    with tool_errors():
        return pipeline.dot_source(text, source_kind(kind), reaction=reaction, whole=whole)


def register_tools(mcp: FastMCP) -> None:  # type: ignore[type-arg]
    """Register the program tools on the given FastMCP instance.

    Args:
        mcp: The FastMCP server instance to register tools on.
    """
    for tool in (parse_source, convert_source, export_dot_source):
        mcp.add_tool(tool, name=tool.__name__, annotations=ToolAnnotations(readOnlyHint=True))
