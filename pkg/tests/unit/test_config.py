"""Unit tests for the configuration module.

Tests Settings loading from environment variables and RunConfig overrides.
"""

import pytest
from pydantic import ValidationError


def test_settings_loads_defaults():
    """Without GAMMAFLOW_ variables the documented defaults apply."""
    from gammaflow.config import Settings

    settings = Settings(_env_file=None)
    assert settings.seed == 0
    assert settings.max_steps == 100_000
    assert settings.max_reactions == 1_000_000
    assert settings.match_cap == 64
    assert settings.exhaustive_bound == 200_000
    assert settings.trace is False
    assert settings.log_level == "WARNING"
    assert settings.transport == "stdio"


def test_settings_reads_env_vars(monkeypatch):
    """Settings should read GAMMAFLOW_-prefixed environment variables."""
    monkeypatch.setenv("GAMMAFLOW_SEED", "7")
    monkeypatch.setenv("GAMMAFLOW_MAX_STEPS", "50")
    monkeypatch.setenv("GAMMAFLOW_TRACE", "true")
    monkeypatch.setenv("GAMMAFLOW_LOG_LEVEL", "DEBUG")
    monkeypatch.setenv("GAMMAFLOW_TRANSPORT", "http")

    from gammaflow.config import Settings

    settings = Settings(_env_file=None)
    assert settings.seed == 7
    assert settings.max_steps == 50
    assert settings.trace is True
    assert settings.log_level == "DEBUG"
    assert settings.transport == "http"


@pytest.mark.parametrize(
    ("name", "value"),
    [("GAMMAFLOW_MATCH_CAP", "0"), ("GAMMAFLOW_MAX_STEPS", "-1"), ("GAMMAFLOW_SEED", "seven")],
)
def test_settings_rejects_invalid_values(monkeypatch, name, value):
    """Budgets and the cap are range-checked; the seed must be an integer."""
    monkeypatch.setenv(name, value)

    from gammaflow.config import Settings

    with pytest.raises(ValidationError):
        Settings(_env_file=None)


def test_run_config_takes_settings_then_overrides(monkeypatch):
    """Overrides that are not None win; None leaves the setting in place."""
    monkeypatch.setenv("GAMMAFLOW_SEED", "3")
    monkeypatch.setenv("GAMMAFLOW_MATCH_CAP", "8")

    from gammaflow.config import RunConfig, Settings

    config = RunConfig.from_settings(Settings(_env_file=None), seed=None, max_steps=10)
    assert config.seed == 3
    assert config.max_steps == 10
    assert config.cap == 8
    assert config.max_reactions == 1_000_000
    assert config.bound == 200_000


def test_run_config_is_frozen():
    """RunConfig is immutable once built."""
    from gammaflow.config import RunConfig

    config = RunConfig()
    with pytest.raises(ValidationError):
        config.seed = 1  # type: ignore[misc]
