"""Transition-system data model plus a concrete-evaluation interpreter.

A model is a guarded, parameterized transition system over integer state
fields: predicates classify states (valid/initial/final), one transition
rewrites every state field simultaneously, and instance symbols stand for
the unknowns of a problem instance (e.g. how many missionaries exist).
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass

from .errors import ExprError, UnboundSymbolError
from .expr import BOOL, INT, Expr, eval_expr, infer_sort, iter_refs

# A concrete state or binding is a plain name -> int mapping.
ConcreteState = dict[str, int]
ConcreteBinding = dict[str, int]


@dataclass(frozen=True)
class Model:
    name: str
    instance_symbols: tuple[str, ...]
    state_fields: tuple[str, ...]
    param_fields: tuple[str, ...]
    valid_pred: Expr
    initial_pred: Expr
    final_pred: Expr
    guard: Expr
    update: dict[str, Expr]
    global_constraints: tuple[Expr, ...] = ()

    def state_scope(self) -> frozenset[str]:
        return frozenset(self.state_fields) | frozenset(self.instance_symbols)

    def step_scope(self) -> frozenset[str]:
        return self.state_scope() | frozenset(self.param_fields)


@dataclass(frozen=True)
class Diagnostic:
    category: str  # unknown-symbol | sort-error | missing-update | duplicate-name
    location: str  # model element, e.g. "guard" or "update[bp]"
    message: str

    def __str__(self) -> str:
        return f"{self.location}: {self.category}: {self.message}"


def _check_expr(expr: Expr, scope: frozenset[str], location: str,
                expected_sort: str, out: list[Diagnostic]) -> None:
    unknown = sorted({name for name in iter_refs(expr) if name not in scope})
    for name in unknown:
        out.append(Diagnostic("unknown-symbol", location,
                              f"references undeclared or out-of-scope symbol '{name}'"))
    if unknown:
        return
    try:
        sort = infer_sort(expr, scope)
    except ExprError as err:
        out.append(Diagnostic("sort-error", location, str(err)))
        return
    if sort != expected_sort:
        out.append(Diagnostic("sort-error", location,
                              f"expected a {expected_sort} expression, found {sort}"))


def validate_model(model: Model) -> list[Diagnostic]:
    """Check every structural invariant; an empty list means well-formed."""
    out: list[Diagnostic] = []

    seen: set[str] = set()
    for group, names in (("instance", model.instance_symbols),
                         ("state", model.state_fields),
                         ("params", model.param_fields)):
        for name in names:
            if name in seen:
                out.append(Diagnostic("duplicate-name", group,
                                      f"symbol '{name}' is declared more than once"))
            seen.add(name)

    state_scope = model.state_scope()
    step_scope = model.step_scope()
    instance_scope = frozenset(model.instance_symbols)

    _check_expr(model.valid_pred, state_scope, "valid", BOOL, out)
    _check_expr(model.initial_pred, state_scope, "initial", BOOL, out)
    _check_expr(model.final_pred, state_scope, "final", BOOL, out)
    _check_expr(model.guard, step_scope, "guard", BOOL, out)

    for name in model.state_fields:
        if name not in model.update:
            out.append(Diagnostic("missing-update", "update",
                                  f"state field '{name}' has no update expression"))
    for name, expr in model.update.items():
        loc = f"update[{name}]"
        if name not in model.state_fields:
            out.append(Diagnostic("unknown-symbol", loc,
                                  f"'{name}' is not a declared state field"))
        _check_expr(expr, step_scope, loc, INT, out)

    for i, expr in enumerate(model.global_constraints):
        _check_expr(expr, instance_scope, f"constrain[{i}]", BOOL, out)

    return out


def _require_cover(binding: Mapping[str, int], names: tuple[str, ...], what: str) -> None:
    missing = [n for n in names if n not in binding]
    if missing:
        raise UnboundSymbolError(missing[0])


def apply_transition(model: Model, state: Mapping[str, int],
                     params: Mapping[str, int],
                     instance: Mapping[str, int]) -> ConcreteState | None:
    """Apply the transition once; None marks an inapplicable (guard-false) step.

    All update expressions read the pre-state, so the assignment is
    simultaneous.  The result is not filtered through the validity
    predicate; callers decide what to do with invalid successors.
    """
    _require_cover(params, model.param_fields, "params")
    _require_cover(instance, model.instance_symbols, "instance")
    binding = {**instance, **state, **params}
    if not eval_expr(model.guard, binding):
        return None
    return {f: eval_expr(model.update[f], binding) for f in model.state_fields}


def state_is_valid(model: Model, state: Mapping[str, int],
                   instance: Mapping[str, int]) -> bool:
    return bool(eval_expr(model.valid_pred, {**instance, **state}))


def state_is_final(model: Model, state: Mapping[str, int],
                   instance: Mapping[str, int]) -> bool:
    return bool(eval_expr(model.final_pred, {**instance, **state}))


def state_is_initial(model: Model, state: Mapping[str, int],
                     instance: Mapping[str, int]) -> bool:
    return bool(eval_expr(model.initial_pred, {**instance, **state}))
