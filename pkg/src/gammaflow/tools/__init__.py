"""MCP tools, one module per concern, each exposing ``register_tools(mcp)``."""

from __future__ import annotations

from collections.abc import Iterator
from contextlib import contextmanager

from mcp.server.fastmcp.exceptions import ToolError

from gammaflow.errors import GammaflowError
from gammaflow.models import SourceKind


def source_kind(kind: str) -> SourceKind:
    """Parse a tool's ``kind`` argument.

    Raises:
        ToolError: ``kind`` is not a known source kind.
    """
    try:
        return SourceKind(kind)
    except ValueError:
        raise ToolError(f"kind must be one of: {', '.join(k.value for k in SourceKind)}") from None


@contextmanager
def tool_errors() -> Iterator[None]:
    """Re-raise library errors as ``ToolError`` so clients see the message."""
    try:
        yield
    except GammaflowError as exc:
        raise ToolError(str(exc)) from exc
    except (KeyError, ValueError) as exc:
        raise ToolError(f"invalid argument: {exc}") from exc
