"""Multiset rewriting interpreter for Gamma programs.

A step selects one reaction and one admissible binding of its replace list to
a sub-multiset, removes the bound elements and adds what the first clause
whose guard holds produces. Reactions are composed in parallel: every step
draws uniformly among the (reaction, binding) pairs of all reactions. A run
ends at the steady state, when no reaction has an admissible binding.
"""

from __future__ import annotations

import logging
import random
from collections import Counter, deque
from collections.abc import Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass

from gammaflow.errors import BoundExceededError, ExecutionFault
from gammaflow.gamma import ByClause, LabelLit, Num, Program, Reaction, Value, Var, evaluate, truthy
from gammaflow.models import Element, RunStatus, is_label

logger = logging.getLogger(__name__)

DEFAULT_MAX_REACTIONS = 1_000_000
DEFAULT_MATCH_CAP = 64
DEFAULT_EXHAUSTIVE_BOUND = 200_000


class Multiset:
    """An immutable bag of elements with positive multiplicities."""

    __slots__ = ("_counts", "_hash")

    def __init__(self, elements: Iterable[Element] = ()) -> None:
        self._counts: Counter[Element] = Counter(elements)
        self._hash: int | None = None

    @classmethod
    def _from_counts(cls, counts: Counter[Element]) -> Multiset:
        bag = cls()
        bag._counts = +counts
        return bag

    def __len__(self) -> int:
        return self._counts.total()

    def __iter__(self) -> Iterator[Element]:
        for element in sorted(self._counts):
            yield from [element] * self._counts[element]

    def __contains__(self, element: object) -> bool:
        return self._counts.get(element, 0) > 0  # type: ignore[call-overload]

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Multiset) and self._counts == other._counts

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._counts.items()))
        return self._hash

    def __repr__(self) -> str:
        return f"Multiset({list(self)!r})"

    def __str__(self) -> str:
        return "{" + ", ".join(str(e) for e in self) + "}"

    def count(self, element: Element) -> int:
        return self._counts.get(element, 0)

    def distinct(self) -> list[Element]:
        """Distinct elements in canonical order."""
        return sorted(self._counts)

    def items(self) -> list[tuple[Element, int]]:
        return [(e, self._counts[e]) for e in sorted(self._counts)]

    def elements(self) -> list[Element]:
        """Every element, repeated by multiplicity, in canonical order."""
        return list(self)

    def add(self, elements: Iterable[Element]) -> Multiset:
        return Multiset._from_counts(self._counts + Counter(elements))

    def remove(self, elements: Iterable[Element]) -> Multiset:
        """Return a copy without ``elements``.

        Raises:
            ValueError: If ``elements`` is not a sub-multiset.
        """
        taken = Counter(elements)
        for element, count in taken.items():
            if self._counts.get(element, 0) < count:
                raise ValueError(f"{element} is not in the multiset {count} time(s)")
        return Multiset._from_counts(self._counts - taken)

    def with_label(self, label: str) -> list[Element]:
        return [e for e in self.distinct() if e.label == label]


@dataclass(frozen=True)
class Binding:
    """A unification of a reaction's replace list with concrete elements.

    Attributes:
        env: Variable values; label variables map to label strings.
        elements: The matched elements, in replace-list order.
        clause: Index of the first clause whose guard holds, or ``None`` when
            no guard holds (only returned by ``find_matches`` with
            ``admissible_only=False``).
    """

    env: Mapping[str, Value]
    elements: tuple[Element, ...]
    clause: int | None


@dataclass(frozen=True)
class Reacted:
    """One entry of a Gamma trace."""

    reaction: str
    consumed: tuple[Element, ...]
    produced: tuple[Element, ...]

    def __str__(self) -> str:
        consumed = ", ".join(str(e) for e in self.consumed)
        produced = ", ".join(str(e) for e in self.produced) or "nothing"
        return f"{self.reaction}: {consumed} -> {produced}"


GammaTrace = tuple[Reacted, ...]


@dataclass(frozen=True)
class GammaRun:
    """Outcome of ``run_to_fixpoint``."""

    multiset: Multiset
    trace: GammaTrace
    status: RunStatus
    seed: int

    @property
    def steps(self) -> int:
        return len(self.trace)


def _unify(pattern_slot: Var | Num | LabelLit, actual: Value, env: dict[str, Value]) -> bool:
    match pattern_slot:
        case Var(name):
            if name in env:
                return env[name] == actual
            env[name] = actual
            return True
        case Num(value):
            return value == actual
        case LabelLit(text):
            return text == actual
    return False  # pragma: no cover


def _bind(reaction: Reaction, element: Element, index: int, env: dict[str, Value]) -> bool:
    pattern = reaction.replace[index]
    return (
        _unify(pattern.value, element.value, env)
        and _unify(pattern.label, element.label, env)
        and _unify(pattern.tag, element.tag, env)
    )


def select_clause(reaction: Reaction, env: Mapping[str, Value]) -> int | None:
    """Index of the first clause whose guard holds under ``env``.

    A guard that cannot be evaluated (division by zero, a label compared
    with a number) counts as false.
    """
    for index, clause in enumerate(reaction.by):
        if clause.guard is None:
            return index
        try:
            if truthy(evaluate(clause.guard, env)):
                return index
        except (KeyError, TypeError, ZeroDivisionError):
            continue
    return None


def find_matches(
    reaction: Reaction,
    multiset: Multiset,
    cap: int | None = DEFAULT_MATCH_CAP,
    *,
    admissible_only: bool = True,
) -> list[Binding]:
    """Enumerate bindings of ``reaction`` against ``multiset``.

    Elements are tried in canonical order for each pattern in turn, drawing
    each element at most as many times as it occurs. All patterns must agree
    on the tag variable.

    Args:
        reaction: Reaction whose replace list is matched.
        multiset: Current multiset.
        cap: Maximum number of bindings to return; ``None`` for all.
        admissible_only: Drop bindings under which no clause guard holds.

    Returns:
        Up to ``cap`` bindings in enumeration order.
    """
    if cap is not None and cap < 1:
        raise ValueError("cap must be >= 1")
    remaining = Counter(dict(multiset.items()))
    candidates = [
        multiset.with_label(p.label.text) if isinstance(p.label, LabelLit) else multiset.distinct()
        for p in reaction.replace
    ]
    found: list[Binding] = []
    chosen: list[Element] = []

    def search(index: int, env: dict[str, Value]) -> bool:
        if index == reaction.arity:
            clause = select_clause(reaction, env)
            if clause is None and admissible_only:
                return False
            found.append(Binding(env=dict(env), elements=tuple(chosen), clause=clause))
            return cap is not None and len(found) >= cap
        for element in candidates[index]:
            if remaining[element] == 0:
                continue
            trial = dict(env)
            if not _bind(reaction, element, index, trial):
                continue
            remaining[element] -= 1
            chosen.append(element)
            done = search(index + 1, trial)
            chosen.pop()
            remaining[element] += 1
            if done:
                return True
        return False

    search(0, {})
    return found


def _produce(reaction: Reaction, clause: ByClause, env: Mapping[str, Value]) -> tuple[Element, ...]:
    tag = env.get(reaction.tag_var) if reaction.tag_var else None
    produced: list[Element] = []
    for output in clause.outputs:
        try:
            value = evaluate(output.value, env)
            label = evaluate(output.label, env)
            out_tag = evaluate(output.tag, env)
        except ZeroDivisionError:
            raise ExecutionFault(
                reaction.name, "division by zero", tag=tag  # type: ignore[arg-type]
            ) from None
        except (KeyError, TypeError) as exc:
            raise ExecutionFault(reaction.name, f"cannot evaluate output: {exc}") from None
        if isinstance(value, str) or not isinstance(label, str) or not is_label(label):
            raise ExecutionFault(reaction.name, f"output [{value}, {label}] is not a valid element")
        if isinstance(out_tag, str) or int(out_tag) < 0:
            raise ExecutionFault(reaction.name, f"output tag {out_tag} is not a valid tag")
        produced.append(Element(value=int(value), label=label, tag=int(out_tag)))
    return tuple(produced)


def react(reaction: Reaction, binding: Binding, multiset: Multiset) -> tuple[Multiset, Reacted]:
    """Apply ``binding`` and return the new multiset with its trace entry.

    Raises:
        ExecutionFault: The bound elements are not in ``multiset``, no clause
            guard holds, or an output expression fails to evaluate.
    """
    try:
        rest = multiset.remove(binding.elements)
    except ValueError as exc:
        raise ExecutionFault(reaction.name, str(exc)) from None
    index = select_clause(reaction, binding.env)
    if index is None:
        raise ExecutionFault(reaction.name, "no clause guard holds for the binding")
    produced = _produce(reaction, reaction.by[index], binding.env)
    logger.debug(
        "reaction %s consumed %d, produced %d", reaction.name, reaction.arity, len(produced)
    )
    return rest.add(produced), Reacted(reaction.name, binding.elements, produced)


def apply(reaction: Reaction, binding: Binding, multiset: Multiset) -> Multiset:
    """Replace the bound elements by what the selected clause produces.

    Args:
        reaction: The reaction to apply.
        binding: A binding returned by ``find_matches`` for ``multiset``.
        multiset: Multiset before the step.

    Returns:
        ``(multiset - consumed) + produced``.

    Raises:
        ExecutionFault: See ``react``.
    """
    return react(reaction, binding, multiset)[0]


def all_matches(
    program: Program, multiset: Multiset, cap: int | None = DEFAULT_MATCH_CAP
) -> list[tuple[Reaction, Binding]]:
    """Admissible (reaction, binding) pairs over every reaction, in program order."""
    return [(r, b) for r in program.reactions for b in find_matches(r, multiset, cap)]


def is_steady(program: Program, multiset: Multiset) -> bool:
    """``True`` when no reaction of ``program`` can fire on ``multiset``."""
    return all(not find_matches(r, multiset, cap=1) for r in program.reactions)


def run_to_fixpoint(
    program: Program,
    initial: Iterable[Element] | None = None,
    seed: int = 0,
    max_reactions: int = DEFAULT_MAX_REACTIONS,
    cap: int = DEFAULT_MATCH_CAP,
) -> GammaRun:
    """Rewrite the multiset until no reaction applies.

    Args:
        program: Reactions in parallel composition.
        initial: Starting elements; defaults to the program's own initial
            multiset.
        seed: PRNG seed; identical arguments give identical traces.
        max_reactions: Reaction budget. Reaching it is reported through the
            returned status, not raised.
        cap: Per-reaction binding enumeration cap.

    Returns:
        Terminal multiset, trace and status.

    Raises:
        ExecutionFault: Propagated from ``react``.
    """
    if max_reactions < 0:
        raise ValueError("max_reactions must be >= 0")
    multiset = Multiset(program.initial if initial is None else initial)
    rng = random.Random(seed)
    trace: list[Reacted] = []
    while True:
        choices = all_matches(program, multiset, cap)
        if not choices:
            status = RunStatus.TERMINATED
            break
        if len(trace) >= max_reactions:
            status = RunStatus.BUDGET_EXHAUSTED
            break
        reaction, binding = rng.choice(choices)
        multiset, entry = react(reaction, binding, multiset)
        trace.append(entry)
    logger.info("gamma run (seed=%d) %s after %d reactions", seed, status, len(trace))
    return GammaRun(multiset=multiset, trace=tuple(trace), status=status, seed=seed)


def replay(program: Program, initial: Iterable[Element], trace: Sequence[Reacted]) -> Multiset:
    """Re-apply a trace to ``initial`` through ``apply``.

    Each entry's consumed elements are unified with its reaction's replace
    list, and the produced elements must match what ``apply`` yields.

    Raises:
        ExecutionFault: An entry does not unify, or produces something else.
    """
    multiset = Multiset(initial)
    for entry in trace:
        reaction = program.reaction(entry.reaction)
        env: dict[str, Value] = {}
        if len(entry.consumed) != reaction.arity or not all(
            _bind(reaction, element, i, env) for i, element in enumerate(entry.consumed)
        ):
            raise ExecutionFault(entry.reaction, "trace entry does not match the replace list")
        binding = Binding(env=env, elements=entry.consumed, clause=select_clause(reaction, env))
        after = apply(reaction, binding, multiset)
        if after != multiset.remove(entry.consumed).add(entry.produced):
            raise ExecutionFault(entry.reaction, "trace entry produced different elements")
        multiset = after
    return multiset


def exhaustive_terminals(
    program: Program,
    initial: Iterable[Element] | None = None,
    bound: int = DEFAULT_EXHAUSTIVE_BOUND,
) -> set[Multiset]:
    """Explore every reaction order breadth-first and collect steady states.

    Raises:
        BoundExceededError: More than ``bound`` distinct multisets were reached.
    """
    start = Multiset(program.initial if initial is None else initial)
    seen = {start}
    queue = deque([start])
    terminals: set[Multiset] = set()
    while queue:
        multiset = queue.popleft()
        choices = all_matches(program, multiset, cap=None)
        if not choices:
            terminals.add(multiset)
            continue
        for reaction, binding in choices:
            successor = apply(reaction, binding, multiset)
            if successor in seen:
                continue
            seen.add(successor)
            if len(seen) > bound:
                raise BoundExceededError(bound)
            queue.append(successor)
    logger.info("explored %d multisets, %d terminal", len(seen), len(terminals))
    return terminals
