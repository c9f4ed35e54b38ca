"""Unit tests for the program tools (parse, convert, dot).

Tools are plain async functions and are awaited directly.
"""

import pytest
from mcp.server.fastmcp.exceptions import ToolError

from gammaflow.fixtures import read_fixture

# --- parse_source ---


async def test_parse_source_gamma():
    """A Gamma listing comes back in canonical form with a summary."""
    from gammaflow.tools.programs import parse_source

    result = await parse_source(read_fixture("example1.gamma"))

    assert result["kind"] == "gamma"
    assert result["summary"] == "3 reactions, 4 initial elements"
    assert "R3 = replace [id1, 'B2', 0], [id2, 'C2', 0]" in result["canonical"]


async def test_parse_source_graph():
    """Graph text is accepted with kind='graph'."""
    from gammaflow.tools.programs import parse_source

    result = await parse_source(read_fixture("example1.df"), kind="graph")

    assert result["summary"].startswith("8 nodes")


async def test_parse_source_rejects_unknown_kind():
    """An unknown kind is a ToolError listing the valid ones."""
    from gammaflow.tools.programs import parse_source

    with pytest.raises(ToolError, match="kind must be one of"):
        await parse_source("", kind="yaml")


async def test_parse_source_reports_syntax_errors():
    """Syntax errors surface with their location."""
    from gammaflow.tools.programs import parse_source

    with pytest.raises(ToolError, match="line 1"):
        await parse_source("R = replace [a,'p'] by by\n")


# --- convert_source ---


async def test_convert_source_graph_to_gamma():
    """A graph becomes a program file and a multiset file."""
    from gammaflow.tools.programs import convert_source

    result = await convert_source(read_fixture("example1.df"))

    assert result["direction"] == "df2gamma"
    assert sorted(result["files"]) == ["program.gamma", "program.mset"]
    assert result["files"]["program.gamma"].count("= replace") == 3


async def test_convert_source_with_fuse():
    """Fusion leaves one reaction."""
    from gammaflow.tools.programs import convert_source

    result = await convert_source(read_fixture("example1.df"), fuse=True)

    assert result["files"]["program.gamma"].count("= replace") == 1


async def test_convert_source_gamma_to_graphs():
    """Each reaction of a program becomes its own graph."""
    from gammaflow.tools.programs import convert_source

    result = await convert_source(read_fixture("example2.gamma"), kind="gamma")

    assert result["direction"] == "gamma2df"
    assert len(result["files"]) == 9
    assert "program.R16.df" in result["files"]


async def test_convert_source_with_inputs():
    """Inputs text feeds the Sources of the graph."""
    from gammaflow.tools.programs import convert_source

    result = await convert_source(
        read_fixture("example2.df"), inputs=read_fixture("example2_z0.inputs")
    )

    assert "element 0 B1 0" in result["files"]["program.mset"]


async def test_convert_source_unsupported_reaction():
    """Reactions without a dataflow counterpart are ToolErrors."""
    from gammaflow.tools.programs import convert_source

    with pytest.raises(ToolError, match="no dataflow node"):
        await convert_source("B = replace [a,'p'], [b,'q'] by [a and b, 'r']\n", kind="gamma")


# --- export_dot_source ---


async def test_export_dot_source_graph():
    """Graph text renders as a single digraph."""
    from gammaflow.tools.programs import export_dot_source

    dot = await export_dot_source(read_fixture("example1.df"))

    assert dot.startswith("digraph dataflow {")


async def test_export_dot_source_unknown_reaction():
    """An unknown reaction name is a ToolError."""
    from gammaflow.tools.programs import export_dot_source

    with pytest.raises(ToolError, match="invalid argument"):
        await export_dot_source(read_fixture("example1.gamma"), kind="gamma", reaction="R9")


# --- register_tools ---


def test_register_tools_adds_program_tools():
    """register_tools adds the three program tools."""
    from mcp.server.fastmcp import FastMCP

    from gammaflow.tools.programs import register_tools

    mcp = FastMCP(name="test")
    register_tools(mcp)

    names = {tool.name for tool in mcp._tool_manager.list_tools()}
    assert names == {"parse_source", "convert_source", "export_dot_source"}
