"""Worked examples shipped with gammaflow.

``example1`` is the straight-line expression ``(a + b) - (c * d)``,
``example2`` the counted loop ``x = x + y`` repeated ``z`` times, ``rd1`` and
``reduced2`` their hand-reduced Gamma forms and ``min`` the smallest-element
program.
"""

from importlib.resources import files

FIXTURES = (
    "example1.df",
    "example1.gamma",
    "example1.inputs",
    "example2.df",
    "example2.gamma",
    "example2_z0.inputs",
    "rd1.gamma",
    "reduced2.gamma",
    "min.gamma",
    "min.mset",
)


def read_fixture(name: str) -> str:
    """Return the text of a bundled fixture.

    Raises:
        FileNotFoundError: If ``name`` is not a bundled fixture.
    """
    if name not in FIXTURES:
        raise FileNotFoundError(f"no fixture named {name!r}")
    return files(__name__).joinpath(name).read_text(encoding="utf-8")
