"""Brute-force ground truth: exhaustive BFS and state enumeration.

Everything here exists to check the solver pipeline, not to compete with
it.  Searches run over concrete instances with finite parameter domains,
dedupe on full state tuples, and refuse (loudly) to exceed their budgets.
"""

from __future__ import annotations

import itertools
from collections import deque
from collections.abc import Mapping, Sequence
from dataclasses import dataclass

from .errors import (DomainBudgetExceededError, InitialStateUndeterminedError,
                     SearchBudgetExceededError, UnboundSymbolError)
from .expr import App, Expr, Ref, eval_expr
from .model import (ConcreteState, Model, apply_transition, state_is_final,
                    state_is_initial, state_is_valid)

DEFAULT_NODE_CAP = 10_000_000

# An instance maps every instance symbol to a value and may additionally
# pin state fields the initial predicate leaves free (e.g. the boat
# capacity, which the corpus models carry inside the state).
Instance = dict[str, int]


@dataclass(frozen=True)
class Plan:
    steps: tuple[dict[str, int], ...]

    def __len__(self) -> int:
        return len(self.steps)


@dataclass(frozen=True)
class Exhausted:
    """No plan within the depth bound.

    frontier_emptied distinguishes "searched the whole reachable space"
    from "stopped at the bound with unexplored frontier".
    """
    max_depth: int
    frontier_emptied: bool
    states_explored: int


@dataclass(frozen=True)
class ReplayFailure:
    step_index: int
    reason: str  # guard-failed | invalid-state


def instance_symbols_part(model: Model, instance: Mapping[str, int]) -> dict[str, int]:
    missing = [s for s in model.instance_symbols if s not in instance]
    if missing:
        raise InitialStateUndeterminedError(
            "instance does not bind symbol(s): " + ", ".join(missing))
    return {s: instance[s] for s in model.instance_symbols}


def _conjuncts(expr: Expr):
    stack = [expr]
    while stack:
        node = stack.pop()
        if isinstance(node, App) and node.op == "and":
            stack.extend(node.args)
        else:
            yield node


def derive_initial_state(model: Model, instance: Mapping[str, int]) -> ConcreteState:
    """Solve the initial predicate for a unique concrete state.

    Equality conjuncts of the form (= field EXPR) are propagated to a
    fixpoint; fields still free afterwards may be pinned by the instance
    mapping.  Anything left over is an error, as is a pinned combination
    the initial predicate rejects.
    """
    syms = instance_symbols_part(model, instance)
    known: dict[str, int] = {f: instance[f] for f in model.state_fields if f in instance}

    equalities = [c for c in _conjuncts(model.initial_pred)
                  if isinstance(c, App) and c.op == "=" and len(c.args) == 2]
    progress = True
    while progress:
        progress = False
        for eq in equalities:
            for target, source in ((eq.args[0], eq.args[1]), (eq.args[1], eq.args[0])):
                if not isinstance(target, Ref) or target.name not in model.state_fields:
                    continue
                if target.name in known:
                    continue
                try:
                    value = eval_expr(source, {**syms, **known})
                except UnboundSymbolError:
                    continue
                if isinstance(value, bool):
                    continue
                known[target.name] = value
                progress = True

    free = [f for f in model.state_fields if f not in known]
    if free:
        raise InitialStateUndeterminedError(
            f"initial predicate of '{model.name}' leaves state field(s) "
            f"undetermined: {', '.join(free)}; pin them in the instance")
    state = {f: known[f] for f in model.state_fields}
    if not state_is_initial(model, state, syms):
        raise InitialStateUndeterminedError(
            "derived state does not satisfy the initial predicate "
            "(contradictory pins?)")
    return state


def default_param_domain(model: Model, initial: Mapping[str, int]) -> dict[str, range]:
    """0..bcap per parameter, taking the boat capacity from the start state."""
    if "bcap" not in initial:
        raise InitialStateUndeterminedError(
            "no default parameter domain: model has no 'bcap' state field; "
            "pass param_domain explicitly")
    cap = initial["bcap"]
    return {p: range(0, cap + 1) for p in model.param_fields}


def bfs_reachability(model: Model, instance: Mapping[str, int],
                     param_domain: Mapping[str, Sequence[int]] | None = None,
                     max_depth: int = 100, *,
                     node_cap: int = DEFAULT_NODE_CAP) -> Plan | Exhausted:
    """Find a minimal plan by breadth-first search, or prove its absence.

    Successors must pass the guard and land in a valid state; the start
    state is the one the initial predicate determines.  Returns the first
    (hence shortest) plan reaching a final state, else Exhausted.
    """
    syms = instance_symbols_part(model, instance)
    initial = derive_initial_state(model, instance)
    if param_domain is None:
        param_domain = default_param_domain(model, initial)
    fields = model.state_fields
    combos = [dict(zip(model.param_fields, values))
              for values in itertools.product(
                  *(list(param_domain[p]) for p in model.param_fields))]

    def key_of(state: Mapping[str, int]):
        return tuple(state[f] for f in fields)

    start_key = key_of(initial)
    parent: dict[tuple, tuple | None] = {start_key: None}
    via: dict[tuple, dict[str, int]] = {}
    queue: deque[tuple[tuple, int]] = deque([(start_key, 0)])
    frontier_emptied = True

    def rebuild(key: tuple) -> Plan:
        steps: list[dict[str, int]] = []
        while parent[key] is not None:
            steps.append(via[key])
            key = parent[key]  # type: ignore[assignment]
        steps.reverse()
        return Plan(tuple(steps))

    while queue:
        key, depth = queue.popleft()
        state = dict(zip(fields, key))
        if state_is_final(model, state, syms):
            return rebuild(key)
        if depth >= max_depth:
            frontier_emptied = False
            continue
        for params in combos:
            succ = apply_transition(model, state, params, syms)
            if succ is None:
                continue
            if not state_is_valid(model, succ, syms):
                continue
            succ_key = key_of(succ)
            if succ_key in parent:
                continue
            if len(parent) >= node_cap:
                raise SearchBudgetExceededError(
                    f"BFS exceeded the node budget of {node_cap} states")
            parent[succ_key] = key
            via[succ_key] = params
            queue.append((succ_key, depth + 1))
    return Exhausted(max_depth, frontier_emptied, len(parent))


def enumerate_vfs(model: Model, instance: Mapping[str, int],
                  state_domain: Mapping[str, Sequence[int]], *,
                  budget: int = DEFAULT_NODE_CAP) -> ConcreteState | None:
    """First state (lexicographic in field order) that is valid and final.

    State fields pinned by the instance collapse to their pinned value.
    Returns None when the domain holds no valid final state, or when the
    instance itself violates the model's global constraints.
    """
    syms = instance_symbols_part(model, instance)
    for constraint in model.global_constraints:
        if not eval_expr(constraint, syms):
            return None
    domains: list[list[int]] = []
    total = 1
    for f in model.state_fields:
        if f in instance:
            values = [instance[f]]
        elif f in state_domain:
            values = list(state_domain[f])
        else:
            raise DomainBudgetExceededError(
                f"no enumeration domain given for state field '{f}'")
        domains.append(values)
        total *= max(len(values), 1)
        if total > budget:
            raise DomainBudgetExceededError(
                f"state domain holds more than {budget} combinations")
    for values in itertools.product(*domains):
        state = dict(zip(model.state_fields, values))
        if state_is_valid(model, state, syms) and state_is_final(model, state, syms):
            return state
    return None


def replay_plan(model: Model, instance: Mapping[str, int],
                start: Mapping[str, int],
                plan: Plan | Sequence[Mapping[str, int]]) -> ConcreteState | ReplayFailure:
    """Re-execute a plan step by step, checking validity after every step."""
    syms = instance_symbols_part(model, instance)
    if not state_is_initial(model, start, syms):
        raise ValueError("replay start state does not satisfy the initial predicate")
    steps = plan.steps if isinstance(plan, Plan) else tuple(plan)
    state = dict(start)
    for i, params in enumerate(steps):
        succ = apply_transition(model, state, params, syms)
        if succ is None:
            return ReplayFailure(i, "guard-failed")
        if not state_is_valid(model, succ, syms):
            return ReplayFailure(i, "invalid-state")
        state = succ
    return state
