"""FastMCP tools for executing graphs and programs.

Registers the following tools on a ``FastMCP`` instance via ``register_tools()``:

- ``run_source``: seeded run of a graph or Gamma program
- ``check_equivalence_source``: graph against its Gamma translation over several seeds
"""

from __future__ import annotations

import logging
from typing import Any

from mcp.server.fastmcp import FastMCP
from mcp.server.fastmcp.exceptions import ToolError
from mcp.types import ToolAnnotations

from gammaflow import pipeline
from gammaflow.config import RunConfig, Settings
from gammaflow.element_text import parse_elements, parse_tokens
from gammaflow.tools import source_kind, tool_errors

logger = logging.getLogger(__name__)

MAX_SEEDS = 100


async def run_source(
    text: str,
    kind: str = "gamma",
    seed: int | None = None,
    max_steps: int | None = None,
    inputs: str | None = None,
    multiset: str | None = None,
    trace: bool = False,
) -> dict[str, Any]:
    """Execute a dataflow graph or a Gamma program under a seeded schedule.

    Args:
        text: Graph or Gamma text.
        kind: ``graph`` or ``gamma``. Defaults to ``gamma``.
        seed: PRNG seed; defaults to ``GAMMAFLOW_SEED``.
        max_steps: Firing / reaction budget; defaults to the configured budgets.
        inputs: Optional inputs text for a graph.
        multiset: Optional initial multiset text for a Gamma program.
        trace: Include the full trace.

    Returns:
        Run report with ``status``, ``steps``, the terminal ``elements`` and
        the ``observable``.

    Raises:
        ToolError: On parse errors or execution faults.
    """
    if max_steps is not None and max_steps < 0:
        raise ToolError("max_steps must be >= 0")
    with tool_errors():
        config = RunConfig.from_settings(
            Settings(), seed=seed, max_steps=max_steps, max_reactions=max_steps, trace=trace or None
        )
        report = pipeline.run_source(
            text,
            source_kind(kind),
            config,
            inputs=parse_tokens(inputs) if inputs else (),
            multiset=parse_elements(multiset) if multiset is not None else None,
        )
    return report.model_dump(mode="json")


async def check_equivalence_source(
    text: str,
    kind: str = "graph",
    seeds: int = 5,
    inputs: str | None = None,
    max_steps: int | None = None,
) -> dict[str, Any]:
    """Compare a graph's runs with its Gamma translation's runs.

    Args:
        text: Graph text, or Gamma text rebuilt into a graph first.
        kind: ``graph`` or ``gamma``. Defaults to ``graph``.
        seeds: Number of seeds per side (1–100), starting at the configured seed.
        inputs: Optional inputs text.
        max_steps: Budget per run on either side.

    Returns:
        Equivalence report; ``pairs`` holds one verdict per seed pair.

    Raises:
        ToolError: If ``seeds`` is out of range, the text does not parse, or
            a run faults.
    """
    if not 1 <= seeds <= MAX_SEEDS:
        raise ToolError(f"seeds must be between 1 and {MAX_SEEDS}")
    with tool_errors():
        config = RunConfig.from_settings(
            Settings(), max_steps=max_steps, max_reactions=max_steps
        )
        report = pipeline.check_source(
            text,
            source_kind(kind),
            config,
            list(range(config.seed, config.seed + seeds)),
            inputs=parse_tokens(inputs) if inputs else (),
        )
    logger.info("equivalence check: %d of %d pairs agree", report.agreements, len(report.pairs))
    return report.model_dump(mode="json")


def register_tools(mcp: FastMCP) -> None:  # type: ignore[type-arg]
    """Register the execution tools on the given FastMCP instance.

    Args:
        mcp: The FastMCP server instance to register tools on.
    """
    mcp.add_tool(
        run_source,
        name="run_source",
        annotations=ToolAnnotations(readOnlyHint=True),
    )
    mcp.add_tool(
        check_equivalence_source,
        name="check_equivalence_source",
        annotations=ToolAnnotations(readOnlyHint=True),
    )
