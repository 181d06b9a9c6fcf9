"""Integer/boolean expression trees over named symbols.

The same trees feed three consumers: the concrete evaluator below (used by
the brute-force oracle and witness replay), the model validator, and the
SMT-LIB emitters.  Operators use SMT-LIB spellings throughout, so an
expression prints the same way in a `.tsm` model file and in a generated
script.
"""

from __future__ import annotations

from collections.abc import Iterator, Mapping
from dataclasses import dataclass

from .errors import SortError, UnboundSymbolError

INT = "Int"
BOOL = "Bool"


@dataclass(frozen=True)
class Lit:
    value: int


@dataclass(frozen=True)
class BoolLit:
    value: bool


@dataclass(frozen=True)
class Ref:
    name: str


@dataclass(frozen=True)
class App:
    op: str
    args: tuple["Expr", ...]


Expr = Lit | BoolLit | Ref | App

# op -> (argument sort, result sort, min arity, max arity or None for n-ary)
_OP_TABLE: dict[str, tuple[str, str, int, int | None]] = {
    "+": (INT, INT, 2, None),
    "*": (INT, INT, 2, None),
    "-": (INT, INT, 1, 2),
    "=": (INT, BOOL, 2, 2),
    "distinct": (INT, BOOL, 2, 2),
    "<": (INT, BOOL, 2, 2),
    "<=": (INT, BOOL, 2, 2),
    ">": (INT, BOOL, 2, 2),
    ">=": (INT, BOOL, 2, 2),
    "and": (BOOL, BOOL, 2, None),
    "or": (BOOL, BOOL, 2, None),
    "not": (BOOL, BOOL, 1, 1),
    "=>": (BOOL, BOOL, 2, 2),
}

OPERATORS = frozenset(_OP_TABLE) | {"ite"}


def check_arity(op: str, argc: int) -> None:
    if op == "ite":
        if argc != 3:
            raise SortError(f"'ite' takes exactly 3 arguments, got {argc}")
        return
    if op not in _OP_TABLE:
        raise SortError(f"unknown operator '{op}'")
    _, _, lo, hi = _OP_TABLE[op]
    if argc < lo or (hi is not None and argc > hi):
        bound = f"exactly {lo}" if hi == lo else (f"at least {lo}" if hi is None else f"{lo} to {hi}")
        raise SortError(f"'{op}' takes {bound} arguments, got {argc}")


def infer_sort(expr: Expr, declared) -> str:
    """Return INT or BOOL; raise on unknown symbols or ill-sorted trees.

    `declared` is the collection of symbol names in scope; every declared
    symbol has integer sort.
    """
    if isinstance(expr, Lit):
        return INT
    if isinstance(expr, BoolLit):
        return BOOL
    if isinstance(expr, Ref):
        if expr.name not in declared:
            raise UnboundSymbolError(expr.name)
        return INT
    check_arity(expr.op, len(expr.args))
    if expr.op == "ite":
        cond, then, els = expr.args
        if infer_sort(cond, declared) != BOOL:
            raise SortError("'ite' condition must be boolean")
        then_sort = infer_sort(then, declared)
        if infer_sort(els, declared) != then_sort:
            raise SortError("'ite' branches must have the same sort")
        return then_sort
    arg_sort, result_sort, _, _ = _OP_TABLE[expr.op]
    for arg in expr.args:
        if infer_sort(arg, declared) != arg_sort:
            raise SortError(f"'{expr.op}' expects {arg_sort} arguments")
    return result_sort


def iter_refs(expr: Expr) -> Iterator[str]:
    """Yield every symbol name referenced in the tree (with repeats)."""
    stack = [expr]
    while stack:
        node = stack.pop()
        if isinstance(node, Ref):
            yield node.name
        elif isinstance(node, App):
            stack.extend(node.args)


def _int(op: str, value) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SortError(f"'{op}' applied to non-integer value")
    return value


def _bool(op: str, value) -> bool:
    if not isinstance(value, bool):
        raise SortError(f"'{op}' applied to non-boolean value")
    return value


def eval_expr(expr: Expr, binding: Mapping[str, int]):
    """Evaluate under a complete integer binding; returns int or bool.

    Connectives short-circuit, so `(=> a b)` behaves as `(or (not a) b)`
    and `ite` evaluates only the taken branch.
    """
    if isinstance(expr, Lit):
        return expr.value
    if isinstance(expr, BoolLit):
        return expr.value
    if isinstance(expr, Ref):
        try:
            return binding[expr.name]
        except KeyError:
            raise UnboundSymbolError(expr.name) from None
    op = expr.op
    check_arity(op, len(expr.args))
    if op == "ite":
        cond = _bool(op, eval_expr(expr.args[0], binding))
        return eval_expr(expr.args[1 if cond else 2], binding)
    if op == "and":
        return all(_bool(op, eval_expr(a, binding)) for a in expr.args)
    if op == "or":
        return any(_bool(op, eval_expr(a, binding)) for a in expr.args)
    if op == "=>":
        if not _bool(op, eval_expr(expr.args[0], binding)):
            return True
        return _bool(op, eval_expr(expr.args[1], binding))
    if op == "not":
        return not _bool(op, eval_expr(expr.args[0], binding))
    vals = [eval_expr(a, binding) for a in expr.args]
    if op == "+":
        return sum(_int(op, v) for v in vals)
    if op == "*":
        out = 1
        for v in vals:
            out *= _int(op, v)
        return out
    if op == "-":
        if len(vals) == 1:
            return -_int(op, vals[0])
        return _int(op, vals[0]) - _int(op, vals[1])
    a, b = (_int(op, v) for v in vals)
    if op == "=":
        return a == b
    if op == "distinct":
        return a != b
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    if op == ">=":
        return a >= b
    raise SortError(f"unknown operator '{op}'")


def render_expr(expr: Expr) -> str:
    """Render as SMT-LIB/DSL concrete syntax (negative literals as `(- k)`)."""
    if isinstance(expr, Lit):
        return str(expr.value) if expr.value >= 0 else f"(- {-expr.value})"
    if isinstance(expr, BoolLit):
        return "true" if expr.value else "false"
    if isinstance(expr, Ref):
        return expr.name
    inner = " ".join(render_expr(a) for a in expr.args)
    return f"({expr.op} {inner})"
