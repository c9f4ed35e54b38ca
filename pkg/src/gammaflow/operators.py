"""Integer operator tables shared by both execution engines.

Division truncates toward zero. Dividing by zero raises ``ZeroDivisionError``;
callers turn it into an ``ExecutionFault`` that names the faulting site.
"""

from collections.abc import Callable

ARITH_OPS: tuple[str, ...] = ("+", "-", "*", "/")
COMPARE_OPS: tuple[str, ...] = ("<", ">", "==", "!=", "<=", ">=")

NEGATED: dict[str, str] = {
    "<": ">=",
    ">": "<=",
    "==": "!=",
    "!=": "==",
    "<=": ">",
    ">=": "<",
}

# Node-id friendly names used when reconstructing graphs.
OP_NAMES: dict[str, str] = {
    "+": "add",
    "-": "sub",
    "*": "mul",
    "/": "div",
    "<": "lt",
    ">": "gt",
    "==": "eq",
    "!=": "ne",
    "<=": "le",
    ">=": "ge",
}


def div_trunc(a: int, b: int) -> int:
    """Integer division truncating toward zero (C semantics)."""
    if b == 0:
        raise ZeroDivisionError("division by zero")
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b > 0) else -q


_ARITH: dict[str, Callable[[int, int], int]] = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "/": div_trunc,
}

_COMPARE: dict[str, Callable[[object, object], bool]] = {
    "<": lambda a, b: a < b,  # type: ignore[operator]
    ">": lambda a, b: a > b,  # type: ignore[operator]
    "==": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    "<=": lambda a, b: a <= b,  # type: ignore[operator]
    ">=": lambda a, b: a >= b,  # type: ignore[operator]
}


def apply_arith(op: str, a: int, b: int) -> int:
    """Apply a binary arithmetic operator."""
    return _ARITH[op](a, b)


def apply_compare(op: str, a: object, b: object) -> bool:
    """Apply a comparison operator.

    Raises:
        TypeError: For ordering comparisons between a label and an integer.
    """
    return _COMPARE[op](a, b)
