"""Configuration for the gammaflow CLI and MCP server.

Reads settings from environment variables with the ``GAMMAFLOW_`` prefix.
An optional ``.env`` file is also supported for local development.
"""

from __future__ import annotations

from typing import Any

from pydantic import BaseModel, ConfigDict, Field
from pydantic_settings import BaseSettings, SettingsConfigDict

from gammaflow.dataflow_exec import DEFAULT_MAX_STEPS
from gammaflow.gamma_exec import DEFAULT_EXHAUSTIVE_BOUND, DEFAULT_MATCH_CAP, DEFAULT_MAX_REACTIONS


class Settings(BaseSettings):
    """gammaflow configuration.

    All fields are read from environment variables prefixed with ``GAMMAFLOW_``.
    Example: ``GAMMAFLOW_SEED=7``.
    """

    model_config = SettingsConfigDict(
        env_prefix="GAMMAFLOW_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    seed: int = Field(
        default=0,
        description="Default PRNG seed for the schedulers",
    )
    max_steps: int = Field(
        default=DEFAULT_MAX_STEPS,
        ge=0,
        description="Dataflow firing budget per run",
    )
    max_reactions: int = Field(
        default=DEFAULT_MAX_REACTIONS,
        ge=0,
        description="Gamma reaction budget per run",
    )
    match_cap: int = Field(
        default=DEFAULT_MATCH_CAP,
        ge=1,
        description="Bindings enumerated per reaction and step",
    )
    exhaustive_bound: int = Field(
        default=DEFAULT_EXHAUSTIVE_BOUND,
        ge=1,
        description="State bound for exhaustive exploration",
    )
    trace: bool = Field(
        default=False,
        description="Include full traces in run reports",
    )
    log_level: str = Field(
        default="WARNING",
        description="Log level: DEBUG, INFO, WARNING, ERROR",
    )
    transport: str = Field(
        default="stdio",
        description="MCP transport mode: stdio or http",
    )


class RunConfig(BaseModel):
    """Execution parameters of one command, after flags are applied."""

    model_config = ConfigDict(frozen=True)

    seed: int = 0
    max_steps: int = Field(default=DEFAULT_MAX_STEPS, ge=0)
    max_reactions: int = Field(default=DEFAULT_MAX_REACTIONS, ge=0)
    cap: int = Field(default=DEFAULT_MATCH_CAP, ge=1)
    bound: int = Field(default=DEFAULT_EXHAUSTIVE_BOUND, ge=1)
    trace: bool = False

    @classmethod
    def from_settings(cls, settings: Settings, **overrides: Any) -> RunConfig:
        """Build a config from ``settings``; overrides that are not ``None`` win."""
        values: dict[str, Any] = {
            "seed": settings.seed,
            "max_steps": settings.max_steps,
            "max_reactions": settings.max_reactions,
            "cap": settings.match_cap,
            "bound": settings.exhaustive_bound,
            "trace": settings.trace,
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)
