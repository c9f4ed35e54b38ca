"""Unit tests for the multiset and inputs line formats."""

import pytest


def test_parse_elements_expands_repetitions():
    """``xN`` repeats an element N times."""
    from gammaflow.element_text import parse_elements
    from gammaflow.models import Element

    elements = parse_elements("# bag\nelement 3 e 0 x2\n\nelement -1 f 4\n")
    assert elements == [
        Element(value=3, label="e", tag=0),
        Element(value=3, label="e", tag=0),
        Element(value=-1, label="f", tag=4),
    ]


def test_format_elements_is_canonical():
    """Distinct elements are sorted and counted."""
    from gammaflow.element_text import format_elements
    from gammaflow.models import Element

    bag = [Element(value=9, label="e"), Element(value=2, label="e"), Element(value=9, label="e")]
    assert format_elements(bag) == "element 2 e 0\nelement 9 e 0 x2\n"
    assert format_elements([]) == ""


def test_zero_repetition_is_rejected():
    """``x0`` would describe nothing and is refused."""
    from gammaflow.element_text import parse_elements
    from gammaflow.errors import GammaSyntaxError

    with pytest.raises(GammaSyntaxError, match="positive") as excinfo:
        parse_elements("element 1 e 0 x0\n")
    assert excinfo.value.line == 1


def test_parse_tokens_rejects_repetition():
    """A source edge carries one token, so repeated lines are refused."""
    from gammaflow.element_text import parse_tokens
    from gammaflow.errors import GammaSyntaxError

    with pytest.raises(GammaSyntaxError, match="cannot be repeated"):
        parse_tokens("element 1 A1 0 x2\n")


def test_parse_tokens_reads_fixture():
    """The Example 1 inputs file holds one token per source edge."""
    from gammaflow.element_text import format_tokens, parse_tokens
    from gammaflow.fixtures import read_fixture

    text = read_fixture("example1.inputs")
    tokens = parse_tokens(text)
    assert [t.label for t in tokens] == ["A1", "B1", "C1", "D1"]
    assert format_tokens(tokens) == text


def test_malformed_line_reports_location():
    """A negative tag is a syntax error with its line."""
    from gammaflow.element_text import parse_elements
    from gammaflow.errors import GammaSyntaxError

    with pytest.raises(GammaSyntaxError) as excinfo:
        parse_elements("element 1 e 0\nelement 1 e -2\n")
    assert excinfo.value.line == 2


def test_builder_failure_becomes_a_syntax_error(monkeypatch):
    """An exception raised while building elements surfaces as ``GammaSyntaxError``."""
    from gammaflow.element_text import _LineBuilder, parse_elements
    from gammaflow.errors import GammaSyntaxError

    def explode(self, children):
        raise ValueError("boom")

    monkeypatch.setattr(_LineBuilder, "element", explode)
    with pytest.raises(GammaSyntaxError, match="boom"):
        parse_elements("element 1 a 0\n")


def test_unknown_fixture_name():
    """read_fixture only serves bundled files."""
    from gammaflow.fixtures import read_fixture

    with pytest.raises(FileNotFoundError):
        read_fixture("nope.df")
