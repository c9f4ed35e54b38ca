"""gammaflow MCP server entry point.

Creates the ``FastMCP`` instance and registers the program and execution
tools. Run this module directly to start the server in STDIO mode.
"""

import logging
import sys

from mcp.server.fastmcp import FastMCP

from gammaflow.config import Settings

# stdout carries JSON-RPC under STDIO transport; logs go to stderr.
logging.basicConfig(
    level=getattr(logging, Settings().log_level.upper(), logging.WARNING),
    stream=sys.stderr,
    format="%(asctime)s [%(name)s] %(levelname)s: %(message)s",
)
logger = logging.getLogger(__name__)

mcp = FastMCP(
    name="gammaflow",
    instructions="""
    You are connected to gammaflow, a transpiler between dynamic dataflow
    graphs and Gamma multiset-rewriting programs.

    Use the available tools to:
    - Parse graph, Gamma or multiset text and get its canonical form
    - Convert a dataflow graph to a Gamma program, or a Gamma program to graphs
    - Run either form under a seeded schedule
    - Check that a graph and its Gamma translation produce the same results
    - Draw graphs as GraphViz DOT

    Key concepts:
    - Element: a (value, label, tag) triple; the tag counts loop iterations
    - Reaction: replaces matching elements with new ones, optionally guarded
    - Steady state: no reaction can fire; its elements are the result
    - Observable: the (label, value) pairs of a finished run, tags erased
    """,
)

from gammaflow.tools.execution import register_tools as _register_execution  # noqa: E402
from gammaflow.tools.programs import register_tools as _register_programs  # noqa: E402

_register_programs(mcp)
_register_execution(mcp)

logger.info("gammaflow MCP server initialised with %d tools", len(mcp._tool_manager.list_tools()))


def main() -> None:
    """Start the MCP server using the transport from ``GAMMAFLOW_TRANSPORT``."""
    transport = Settings().transport
    logger.info("Starting gammaflow MCP server (transport=%s)", transport)
    mcp.run(transport=transport)  # type: ignore[arg-type]


if __name__ == "__main__":
    main()
