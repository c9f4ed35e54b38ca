"""Concrete syntax for Gamma programs: parser and canonical printer.

The grammar is a reconstruction consistent with every listing of the worked
examples::

    program   := (multiset | reaction)*
    multiset  := "multiset" "{" [element ("," element)*] "}"
    reaction  := NAME "=" "replace" pattern ("," pattern)* clause+
    clause    := "by" production [("if" | "where") expr | "else"] [";"]
    production:= "0" | output ("," output)*
    pattern   := "[" value "," label ["," tag] "]"
    output    := "[" expr "," expr ["," expr] "]"

Keywords are case-insensitive (``If`` and ``if`` both occur in listings).
Labels are single-quoted; a backtick may open the quote. Two-field tuples
get the literal tag ``0``. ``#`` starts a comment. Newlines are plain
whitespace: keywords delimit clauses, so listings parse as written.
"""

from __future__ import annotations

import logging

from lark import Lark, Token, Transformer, v_args
from lark.exceptions import (
    UnexpectedCharacters,
    UnexpectedEOF,
    UnexpectedInput,
    UnexpectedToken,
    VisitError,
)

from gammaflow.errors import GammaSyntaxError, GammaValidationError
from gammaflow.gamma import (
    BinOp,
    ByClause,
    Expr,
    LabelLit,
    Not,
    Num,
    Output,
    Pattern,
    Program,
    Reaction,
    Var,
    validate_program,
)
from gammaflow.models import Element

logger = logging.getLogger(__name__)

_GRAMMAR = r"""
start: _item*
_item: multiset | reaction

multiset: _MULTISET "{" [element ("," element)*] "}"
element: "[" SIGNED_INT "," LABEL ["," INT] "]"

reaction: NAME "=" _REPLACE pattern ("," pattern)* clause+
pattern: "[" _value_slot "," _label_slot ["," tag_slot] "]"
_value_slot: var | num
_label_slot: var | label
tag_slot: var | num

clause: _BY production [guard] [";"]
guard: _IF expr
     | _ELSE -> else_guard
production: INT -> null_or_int
          | output ("," output)* -> outputs
output: "[" expr "," expr ["," tag_expr] "]"
tag_expr: expr

?expr: or_expr
?or_expr: and_expr
        | or_expr _OR and_expr -> or_op
?and_expr: not_expr
         | and_expr _AND not_expr -> and_op
?not_expr: comparison
         | _NOT not_expr -> not_op
?comparison: sum
           | sum CMP_OP sum -> binop
?sum: product
    | sum ADD_OP product -> binop
?product: unary
        | product MUL_OP unary -> binop
?unary: atom
      | ADD_OP unary -> signed
?atom: num
     | var
     | label
     | "(" expr ")"

num: INT
var: NAME
label: LABEL

_REPLACE.2: /replace\b/i
_BY.2: /by\b/i
_IF.2: /(if|where)\b/i
_ELSE.2: /else\b/i
_AND.2: /and\b/i
_OR.2: /or\b/i
_NOT.2: /not\b/i
_MULTISET.2: /multiset\b/i

CMP_OP: "==" | "!=" | "<=" | ">=" | "<" | ">"
ADD_OP: "+" | "-"
MUL_OP: "*" | "/"
LABEL: /[`'][A-Za-z0-9_]+'/
NAME: /[A-Za-z_][A-Za-z0-9_]*/
INT: /[0-9]+/
SIGNED_INT: /-?[0-9]+/
COMMENT: /#[^\n]*/

%import common.WS
%ignore WS
%ignore COMMENT
"""

_parser = Lark(_GRAMMAR, parser="lalr", propagate_positions=True)


class _Unsupported(Exception):
    """Raised inside the transformer; carries a syntax message and token."""

    def __init__(self, message: str, token: Token | None = None) -> None:
        super().__init__(message)
        self.token = token


class _ProgramBuilder(Transformer):
    def __init__(self) -> None:
        super().__init__()
        self.reactions: list[Reaction] = []
        self.initial: list[Element] = []

    # --- atoms ---

    @v_args(inline=True)
    def num(self, token: Token) -> Num:
        return Num(int(token))

    @v_args(inline=True)
    def var(self, token: Token) -> Var:
        return Var(str(token))

    @v_args(inline=True)
    def label(self, token: Token) -> LabelLit:
        return LabelLit(str(token)[1:-1])

    @v_args(inline=True)
    def binop(self, left: Expr, op: Token, right: Expr) -> BinOp:
        return BinOp(str(op), left, right)

    @v_args(inline=True)
    def or_op(self, left: Expr, right: Expr) -> BinOp:
        return BinOp("or", left, right)

    @v_args(inline=True)
    def and_op(self, left: Expr, right: Expr) -> BinOp:
        return BinOp("and", left, right)

    @v_args(inline=True)
    def not_op(self, operand: Expr) -> Not:
        return Not(operand)

    @v_args(inline=True)
    def signed(self, sign: Token, operand: Expr) -> Expr:
        if str(sign) == "+":
            return operand
        if isinstance(operand, Num):
            return Num(-operand.value)
        return BinOp("-", Num(0), operand)

    # --- reactions ---

    @v_args(inline=True)
    def tag_slot(self, tag: Var | Num) -> Var | Num:
        return tag

    @v_args(inline=True)
    def tag_expr(self, tag: Expr) -> Expr:
        return tag

    @v_args(inline=True)
    def pattern(
        self, value: Var | Num, label: Var | LabelLit, tag: Var | Num | None = None
    ) -> Pattern:
        return Pattern(value, label, Num(0) if tag is None else tag)

    @v_args(inline=True)
    def output(self, value: Expr, label: Expr, tag: Expr | None = None) -> Output:
        return Output(value, label, Num(0) if tag is None else tag)

    @v_args(inline=True)
    def null_or_int(self, token: Token) -> tuple[Output, ...] | None:
        if int(token) != 0:
            raise _Unsupported(f"'by {token}': only 'by 0' denotes the empty production", token)
        return None

    def outputs(self, items: list[Output | None]) -> tuple[Output, ...]:
        return tuple(o for o in items if o is not None)

    @v_args(inline=True)
    def guard(self, expr: Expr) -> Expr:
        return expr

    def else_guard(self, _: list[object]) -> str:
        return "else"

    @v_args(inline=True)
    def clause(
        self, production: tuple[Output, ...] | None, guard: Expr | str | None = None
    ) -> ByClause:
        condition = None if guard in (None, "else") else guard
        if production is None:
            return ByClause(outputs=(), guard=condition, is_null=True)  # type: ignore[arg-type]
        return ByClause(outputs=production, guard=condition)  # type: ignore[arg-type]

    def reaction(self, items: list[object]) -> None:
        name = items[0]
        patterns = tuple(i for i in items[1:] if isinstance(i, Pattern))
        clauses = tuple(i for i in items[1:] if isinstance(i, ByClause))
        self.reactions.append(Reaction(name=str(name), replace=patterns, by=clauses))

    # --- multiset ---

    @v_args(inline=True)
    def element(self, value: Token, label: Token, tag: Token | None = None) -> Element:
        return Element(value=int(value), label=str(label)[1:-1], tag=0 if tag is None else int(tag))

    def multiset(self, items: list[Element | None]) -> None:
        self.initial.extend(e for e in items if e is not None)


def _syntax_error(exc: UnexpectedInput) -> GammaSyntaxError:
    expected = getattr(exc, "expected", None) or getattr(exc, "allowed", None) or ()
    return GammaSyntaxError(
        "unexpected input",
        line=getattr(exc, "line", 0) or 0,
        column=getattr(exc, "column", 0) or 0,
        expected=[str(e) for e in expected],
    )


def parse_program(text: str) -> Program:
    """Parse Gamma source text into a validated ``Program``.

    Args:
        text: Program text in the concrete syntax documented in this module.

    Returns:
        The program AST.

    Raises:
        GammaSyntaxError: Malformed text, with line, column and expected tokens.
        GammaValidationError: Unbound variables, duplicate reaction names,
            duplicate binders or other semantic violations.
    """
    try:
        tree = _parser.parse(text)
    except (UnexpectedToken, UnexpectedCharacters, UnexpectedEOF) as exc:
        raise _syntax_error(exc) from exc
    except UnexpectedInput as exc:  # pragma: no cover
        raise GammaSyntaxError(str(exc)) from exc

    builder = _ProgramBuilder()
    try:
        builder.transform(tree)
    except VisitError as exc:
        cause = exc.orig_exc
        token = cause.token if isinstance(cause, _Unsupported) else None
        if token is None:
            token = getattr(exc.obj, "meta", None)
        raise GammaSyntaxError(
            str(cause) if isinstance(cause, _Unsupported) else f"in {exc.rule}: {cause}",
            line=getattr(token, "line", 0) or 0,
            column=getattr(token, "column", 0) or 0,
        ) from exc

    program = Program(reactions=tuple(builder.reactions), initial=tuple(builder.initial))
    violations = validate_program(program)
    if violations:
        raise GammaValidationError(violations)
    logger.debug(
        "Parsed program with %d reactions and %d initial elements",
        len(program.reactions),
        len(program.initial),
    )
    return program


def parse_reaction(text: str) -> Reaction:
    """Parse text holding exactly one reaction."""
    program = parse_program(text)
    if len(program.reactions) != 1:
        raise GammaSyntaxError(f"expected one reaction, found {len(program.reactions)}")
    return program.reactions[0]


# --- printing ---

_PRECEDENCE = {
    "or": 1,
    "and": 2,
    "==": 4,
    "!=": 4,
    "<": 4,
    ">": 4,
    "<=": 4,
    ">=": 4,
    "+": 5,
    "-": 5,
    "*": 6,
    "/": 6,
}
_NOT_PRECEDENCE = 3
_ATOM_PRECEDENCE = 9


def _precedence(expr: Expr) -> int:
    match expr:
        case BinOp(op, _, _):
            return _PRECEDENCE[op]
        case Not():
            return _NOT_PRECEDENCE
        case Num(value) if value < 0:
            return 7
        case _:
            return _ATOM_PRECEDENCE


def format_expr(expr: Expr) -> str:
    """Print ``expr`` with the minimum parentheses that re-parse to it."""
    match expr:
        case Num(value):
            return str(value)
        case Var(name):
            return name
        case LabelLit(text):
            return f"'{text}'"
        case Not(operand):
            inner = format_expr(operand)
            if _precedence(operand) < _NOT_PRECEDENCE:
                inner = f"({inner})"
            return f"not {inner}"
        case BinOp(op, left, right):
            mine = _PRECEDENCE[op]
            comparison = mine == 4
            lhs, rhs = format_expr(left), format_expr(right)
            if _precedence(left) < mine or (comparison and _precedence(left) <= mine):
                lhs = f"({lhs})"
            if _precedence(right) <= mine:
                rhs = f"({rhs})"
            return f"{lhs} {op} {rhs}"
    raise TypeError(f"cannot print {expr!r}")  # pragma: no cover


def format_pattern(pattern: Pattern) -> str:
    fields = (pattern.value, pattern.label, pattern.tag)
    return "[" + ", ".join(format_expr(f) for f in fields) + "]"


def format_output(output: Output) -> str:
    return f"[{format_expr(output.value)}, {format_expr(output.label)}, {format_expr(output.tag)}]"


def format_reaction(reaction: Reaction) -> str:
    """Canonical text of one reaction (no trailing newline)."""
    lines = [f"{reaction.name} = replace " + ", ".join(format_pattern(p) for p in reaction.replace)]
    last = len(reaction.by) - 1
    for index, clause in enumerate(reaction.by):
        production = "0" if clause.is_null else ", ".join(format_output(o) for o in clause.outputs)
        line = f"  by {production}"
        if clause.guard is not None:
            line += f" if {format_expr(clause.guard)}"
        elif index == last and last > 0:
            line += " else"
        lines.append(line)
    return "\n".join(lines)


def format_element(element: Element) -> str:
    return f"[{element.value}, '{element.label}', {element.tag}]"


def print_program(program: Program) -> str:
    """Canonical text of ``program``.

    The initial multiset, when present, comes first in a ``multiset { }``
    section with elements in canonical order; reactions follow in program
    order separated by blank lines.
    """
    blocks: list[str] = []
    if program.initial:
        listing = ",\n".join(f"  {format_element(e)}" for e in sorted(program.initial))
        blocks.append(f"multiset {{\n{listing}\n}}")
    blocks.extend(format_reaction(r) for r in program.reactions)
    return "\n\n".join(blocks) + "\n" if blocks else ""


def program_summary(program: Program) -> str:
    """One-line description, e.g. ``3 reactions, 4 initial elements``."""
    return f"{len(program.reactions)} reactions, {len(program.initial)} initial elements"
