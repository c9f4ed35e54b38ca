"""Shared fixtures for the unit tests."""

from collections.abc import Callable
from pathlib import Path

import pytest


@pytest.fixture
def fixture_file(tmp_path: Path) -> Callable[[str], Path]:
    """Copy a bundled fixture into ``tmp_path`` and return its path."""
    from gammaflow.fixtures import read_fixture

    def copy(name: str) -> Path:
        path = tmp_path / name
        path.write_text(read_fixture(name), encoding="utf-8")
        return path

    return copy


@pytest.fixture(autouse=True)
def _clean_env(monkeypatch):
    """Keep GAMMAFLOW_* variables from the outer environment out of the tests."""
    import os

    for key in list(os.environ):
        if key.startswith("GAMMAFLOW_"):
            monkeypatch.delenv(key)
