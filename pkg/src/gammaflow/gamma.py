"""AST of the Gamma reaction language.

A reaction names a *replace list* of patterns matched against multiset
elements and a *by list* of clauses. Each clause produces a list of output
tuples (or nothing, for ``by 0``) and may be guarded by a condition; the
first clause whose guard holds is the one that fires. A trailing unguarded
clause plays the role of ``else``.

Patterns are triples ``[value, label, tag]``. The value slot is a variable or
an integer literal, the label slot a label literal or a label variable, and
the tag slot the reaction's single tag variable or an integer literal.
"""

from __future__ import annotations

from collections import Counter
from collections.abc import Iterator, Mapping
from dataclasses import dataclass, field, replace

from gammaflow.models import Element, Violation
from gammaflow.operators import ARITH_OPS, COMPARE_OPS, apply_arith, apply_compare

BOOL_OPS = ("and", "or")


@dataclass(frozen=True, slots=True)
class Num:
    value: int


@dataclass(frozen=True, slots=True)
class Var:
    name: str


@dataclass(frozen=True, slots=True)
class LabelLit:
    text: str


@dataclass(frozen=True, slots=True)
class BinOp:
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True, slots=True)
class Not:
    operand: Expr


Expr = Num | Var | LabelLit | BinOp | Not
Value = int | str | bool


@dataclass(frozen=True, slots=True)
class Pattern:
    """One entry of a replace list."""

    value: Var | Num
    label: Var | LabelLit
    tag: Var | Num = Num(0)


@dataclass(frozen=True, slots=True)
class Output:
    """One produced tuple of a by clause."""

    value: Expr
    label: Expr
    tag: Expr = Num(0)


@dataclass(frozen=True, slots=True)
class ByClause:
    """A by clause: outputs, optional guard, or the empty production ``by 0``."""

    outputs: tuple[Output, ...] = ()
    guard: Expr | None = None
    is_null: bool = False


@dataclass(frozen=True, slots=True)
class Reaction:
    name: str
    replace: tuple[Pattern, ...]
    by: tuple[ByClause, ...]

    @property
    def arity(self) -> int:
        return len(self.replace)

    def value_vars(self) -> list[str]:
        return [p.value.name for p in self.replace if isinstance(p.value, Var)]

    def label_vars(self) -> list[str]:
        return [p.label.name for p in self.replace if isinstance(p.label, Var)]

    def tag_vars(self) -> list[str]:
        return sorted({p.tag.name for p in self.replace if isinstance(p.tag, Var)})

    @property
    def tag_var(self) -> str | None:
        tags = self.tag_vars()
        return tags[0] if tags else None

    def is_guarded(self) -> bool:
        return any(c.guard is not None for c in self.by)


@dataclass(frozen=True, slots=True)
class Program:
    """Reactions in parallel composition plus an optional initial multiset."""

    reactions: tuple[Reaction, ...] = ()
    initial: tuple[Element, ...] = field(default=())

    def reaction(self, name: str) -> Reaction:
        for r in self.reactions:
            if r.name == name:
                return r
        raise KeyError(name)


# --- expression helpers ---


def walk(expr: Expr) -> Iterator[Expr]:
    """Yield ``expr`` and all its subexpressions, parents first."""
    yield expr
    match expr:
        case BinOp(_, left, right):
            yield from walk(left)
            yield from walk(right)
        case Not(operand):
            yield from walk(operand)


def free_vars(expr: Expr) -> set[str]:
    return {e.name for e in walk(expr) if isinstance(e, Var)}


def substitute(expr: Expr, mapping: Mapping[str, Expr]) -> Expr:
    """Replace variables by expressions."""
    match expr:
        case Var(name):
            return mapping.get(name, expr)
        case BinOp(op, left, right):
            return BinOp(op, substitute(left, mapping), substitute(right, mapping))
        case Not(operand):
            return Not(substitute(operand, mapping))
        case _:
            return expr


def _as_int(value: Value) -> int:
    if isinstance(value, str):
        raise TypeError(f"label {value!r} used as a number")
    return int(value)


def evaluate(expr: Expr, env: Mapping[str, Value]) -> Value:
    """Evaluate ``expr`` under ``env``.

    Comparisons and boolean operators yield ``bool``; arithmetic yields
    ``int`` with division truncating toward zero.

    Raises:
        KeyError: Unbound variable.
        TypeError: A label used in arithmetic or ordered against a number.
        ZeroDivisionError: Division by zero.
    """
    match expr:
        case Num(value):
            return value
        case LabelLit(text):
            return text
        case Var(name):
            return env[name]
        case Not(operand):
            return not truthy(evaluate(operand, env))
        case BinOp("and", left, right):
            return truthy(evaluate(left, env)) and truthy(evaluate(right, env))
        case BinOp("or", left, right):
            return truthy(evaluate(left, env)) or truthy(evaluate(right, env))
        case BinOp(op, left, right) if op in COMPARE_OPS:
            return apply_compare(op, evaluate(left, env), evaluate(right, env))
        case BinOp(op, left, right):
            return apply_arith(op, _as_int(evaluate(left, env)), _as_int(evaluate(right, env)))
    raise TypeError(f"cannot evaluate {expr!r}")  # pragma: no cover


def truthy(value: Value) -> bool:
    """Guard truth: booleans as-is, integers when nonzero, labels never."""
    if isinstance(value, str):
        return False
    return bool(value)


def is_constant(expr: Expr) -> bool:
    return not free_vars(expr) and not any(isinstance(e, LabelLit) for e in walk(expr))


def fold(expr: Expr) -> Expr:
    """Constant-fold arithmetic subtrees that mention no variable."""
    match expr:
        case BinOp(op, left, right):
            folded = BinOp(op, fold(left), fold(right))
            if op in ARITH_OPS and isinstance(folded.left, Num) and isinstance(folded.right, Num):
                try:
                    return Num(apply_arith(op, folded.left.value, folded.right.value))
                except ZeroDivisionError:
                    return folded
            return folded
        case Not(operand):
            return Not(fold(operand))
        case _:
            return expr


# --- validation ---


def _binding_names(reaction: Reaction) -> list[str]:
    return reaction.value_vars() + reaction.label_vars()


def validate_reaction(reaction: Reaction) -> list[Violation]:
    """Report every structural violation of ``reaction``.

    Checks: nonempty replace and by lists, pairwise distinct value and label
    binders, a single tag variable not reused as a binder, every free
    variable bound, no outputs in a ``by 0`` clause, and no clause after an
    unguarded one.
    """
    name = reaction.name
    found: list[Violation] = []

    def add(kind: str, message: str) -> None:
        found.append(Violation(kind=kind, subject=name, message=message))

    if not reaction.replace:
        add("empty-replace", "replace list is empty")
    if not reaction.by:
        add("empty-by", "by list is empty")

    binders = _binding_names(reaction)
    for var, count in sorted(Counter(binders).items()):
        if count > 1:
            add("duplicate-binder", f"variable {var} bound by {count} patterns")
    tags = reaction.tag_vars()
    if len(tags) > 1:
        add("multiple-tag-variables", f"tag variables {', '.join(tags)}")
    for tag in tags:
        if tag in binders:
            add("duplicate-binder", f"tag variable {tag} also binds a value or label")

    bound = set(binders) | set(tags)
    for index, clause in enumerate(reaction.by):
        exprs: list[Expr] = [clause.guard] if clause.guard is not None else []
        for out in clause.outputs:
            exprs.extend((out.value, out.label, out.tag))
        unbound = sorted(set().union(*(free_vars(e) for e in exprs)) - bound) if exprs else []
        for var in unbound:
            add("unbound-variable", f"variable {var} is not bound by the replace list")
        if clause.is_null and clause.outputs:
            add("null-with-outputs", "a 'by 0' clause cannot produce outputs")
        if clause.guard is None and index < len(reaction.by) - 1:
            add("unreachable-clause", f"clause {index + 1} is unguarded but not last")
    return found


def validate_program(program: Program) -> list[Violation]:
    """Validate every reaction and check reaction names are unique."""
    found: list[Violation] = []
    for name, count in sorted(Counter(r.name for r in program.reactions).items()):
        if count > 1:
            found.append(
                Violation(kind="duplicate-reaction", subject=name, message=f"defined {count} times")
            )
    for reaction in program.reactions:
        found.extend(validate_reaction(reaction))
    return found


# --- structural comparison ---


def canonical_reaction(reaction: Reaction) -> Reaction:
    """Alpha-rename ``reaction`` positionally and drop its name.

    Value variables become ``id1..idn`` in pattern order, label variables
    ``x1..xk`` and the tag variable ``v``. Two reactions that differ only in
    binder names and reaction name have equal canonical forms.
    """
    mapping: dict[str, Expr] = {}
    for index, var in enumerate(reaction.value_vars(), start=1):
        mapping[var] = Var(f"id{index}")
    for index, var in enumerate(reaction.label_vars(), start=1):
        mapping[var] = Var(f"x{index}")
    for var in reaction.tag_vars():
        mapping[var] = Var("v")

    def rename(slot: Expr) -> Expr:
        return substitute(slot, mapping)

    patterns = tuple(
        Pattern(rename(p.value), rename(p.label), rename(p.tag))  # type: ignore[arg-type]
        for p in reaction.replace
    )
    clauses = tuple(
        replace(
            c,
            guard=None if c.guard is None else rename(c.guard),
            outputs=tuple(
                Output(rename(o.value), rename(o.label), rename(o.tag)) for o in c.outputs
            ),
        )
        for c in reaction.by
    )
    return Reaction(name="", replace=patterns, by=clauses)


def same_shape(a: Reaction, b: Reaction) -> bool:
    """``True`` if the reactions are equal up to binder and reaction names."""
    return canonical_reaction(a) == canonical_reaction(b)


def relabel_reaction(reaction: Reaction, labels: Mapping[str, str]) -> Reaction:
    """Rename label literals throughout ``reaction`` (for label bijections)."""
    mapping = {old: LabelLit(new) for old, new in labels.items()}

    def swap(expr: Expr) -> Expr:
        match expr:
            case LabelLit(text):
                return mapping.get(text, expr)
            case BinOp(op, left, right):
                return BinOp(op, swap(left), swap(right))
            case Not(operand):
                return Not(swap(operand))
            case _:
                return expr

    return Reaction(
        name=reaction.name,
        replace=tuple(
            Pattern(p.value, swap(p.label), p.tag)  # type: ignore[arg-type]
            for p in reaction.replace
        ),
        by=tuple(
            replace(
                c,
                guard=None if c.guard is None else swap(c.guard),
                outputs=tuple(Output(o.value, swap(o.label), o.tag) for o in c.outputs),
            )
            for c in reaction.by
        ),
    )


def produced_labels(reaction: Reaction) -> set[str]:
    """Label literals the reaction may produce."""
    return {
        o.label.text for c in reaction.by for o in c.outputs if isinstance(o.label, LabelLit)
    }


def guard_label_literals(reaction: Reaction, var: str) -> set[str] | None:
    """Labels a label variable is restricted to by ``var == 'L'`` disjunctions.

    Returns ``None`` when some clause does not restrict ``var`` that way, in
    which case the variable may match any label.
    """
    allowed: set[str] = set()
    for clause in reaction.by:
        if clause.guard is None:
            return None
        labels = _disjunct_labels(clause.guard, var)
        if labels is None:
            return None
        allowed |= labels
    return allowed


def _disjunct_labels(expr: Expr, var: str) -> set[str] | None:
    match expr:
        case BinOp("or", left, right):
            a, b = _disjunct_labels(left, var), _disjunct_labels(right, var)
            return None if a is None or b is None else a | b
        case BinOp("==", Var(name), LabelLit(text)) | BinOp("==", LabelLit(text), Var(name)):
            return {text} if name == var else None
        case _:
            return None
