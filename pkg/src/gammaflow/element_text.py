"""Line formats for multisets and dataflow input tokens.

Multiset files (``.mset``) hold one element per line, optionally repeated::

    element <value> <label> <tag> [x<count>]

Input files hold one token per line for the Source edges of a graph::

    token <value> <label> <tag>

``#`` starts a comment; blank lines are ignored. Both statements may appear in
either kind of file, but ``parse_tokens`` rejects repetition counts since a
Source edge carries exactly one token.
"""

from __future__ import annotations

from collections import Counter
from collections.abc import Iterable

from lark import Lark, Token, Transformer, v_args
from lark.exceptions import (
    UnexpectedCharacters,
    UnexpectedEOF,
    UnexpectedInput,
    UnexpectedToken,
    VisitError,
)

from gammaflow.errors import GammaSyntaxError
from gammaflow.models import Element

_GRAMMAR = r"""
start: _NL* (_line _NL+)* _line?
_line: element | token
element: "element" SIGNED LABEL INT [COUNT]
token: "token" SIGNED LABEL INT

COUNT: /x[0-9]+/
LABEL: /[A-Za-z0-9_]+/
SIGNED: /-?[0-9]+/
INT: /[0-9]+/
COMMENT: /#[^\n]*/
_NL: /\r?\n/

%import common.WS_INLINE
%ignore WS_INLINE
%ignore COMMENT
"""

_parser = Lark(_GRAMMAR, parser="lalr")


class _LineBuilder(Transformer):
    def __init__(self) -> None:
        super().__init__()
        self.items: list[tuple[str, Element, int, Token]] = []

    @v_args(inline=True)
    def element(self, value: Token, label: Token, tag: Token, count: Token | None) -> None:
        times = 1 if count is None else int(str(count)[1:])
        self.items.append(("element", _element(value, label, tag), times, value))

    @v_args(inline=True)
    def token(self, value: Token, label: Token, tag: Token) -> None:
        self.items.append(("token", _element(value, label, tag), 1, value))


def _element(value: Token, label: Token, tag: Token) -> Element:
    return Element(value=int(value), label=str(label), tag=int(tag))


def _parse_lines(text: str) -> list[tuple[str, Element, int, Token]]:
    try:
        tree = _parser.parse(text)
    except (UnexpectedToken, UnexpectedCharacters, UnexpectedEOF) as exc:
        expected = getattr(exc, "expected", None) or getattr(exc, "allowed", None) or ()
        raise GammaSyntaxError(
            "unexpected input",
            line=getattr(exc, "line", 0) or 0,
            column=getattr(exc, "column", 0) or 0,
            expected=[str(e) for e in expected],
        ) from exc
    except UnexpectedInput as exc:  # pragma: no cover
        raise GammaSyntaxError(str(exc)) from exc
    builder = _LineBuilder()
    try:
        builder.transform(tree)
    except VisitError as exc:
        raise GammaSyntaxError(f"in {exc.rule}: {exc.orig_exc}") from exc
    return builder.items


def parse_elements(text: str) -> list[Element]:
    """Parse multiset text into a list of elements, repetitions expanded.

    Raises:
        GammaSyntaxError: On malformed lines or a zero repetition count.
    """
    elements: list[Element] = []
    for _, element, times, token in _parse_lines(text):
        if times < 1:
            raise GammaSyntaxError(
                f"repetition count of {element} must be positive",
                line=token.line or 0,
                column=token.column or 0,
            )
        elements.extend([element] * times)
    return elements


def parse_tokens(text: str) -> list[Element]:
    """Parse an inputs file into the initial tokens of a graph.

    Raises:
        GammaSyntaxError: On malformed lines or a repeated ``element`` line.
    """
    tokens: list[Element] = []
    for _, element, times, token in _parse_lines(text):
        if times != 1:
            raise GammaSyntaxError(
                f"input token {element} cannot be repeated",
                line=token.line or 0,
                column=token.column or 0,
            )
        tokens.append(element)
    return tokens


def format_elements(elements: Iterable[Element]) -> str:
    """Canonical multiset text: distinct elements in order, counts as ``xN``."""
    counts = Counter(elements)
    lines = []
    for element in sorted(counts):
        suffix = f" x{counts[element]}" if counts[element] > 1 else ""
        lines.append(f"element {element.value} {element.label} {element.tag}{suffix}")
    return "\n".join(lines) + "\n" if lines else ""


def format_tokens(tokens: Iterable[Element]) -> str:
    """Inputs-file text, one ``token`` line per element sorted by label."""
    lines = [f"token {t.value} {t.label} {t.tag}" for t in sorted(tokens, key=lambda t: t.label)]
    return "\n".join(lines) + "\n" if lines else ""
