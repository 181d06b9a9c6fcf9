"""Compile models into SMT-LIB v2 scripts for the two properties.

Two questions get encoded: does a valid final state exist at all (a plain
conjunction over one unknown state), and can a bounded sequence of
transitions connect an initial state to a final one.  The path property
has two back-ends:

* ``unrolled`` declares one set of state constants per step and chains
  them with explicit transition equalities; it is solver-portable, stays
  inside quantifier-free integer arithmetic, and asks "is there a path of
  length at most d".
* ``recursive`` packs the state into an integer array and defines the
  n-step transition as a recursive function, which requires a solver with
  native recursive-function support.

Both share one prelude of function definitions, so the concrete transition
semantics is written exactly once per model.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass
from enum import Enum

from .errors import ConfigError, EncodingError
from .expr import App, Expr, Lit, Ref, iter_refs, render_expr
from .model import Model, validate_model


class Property(str, Enum):
    VFS = "vfs"
    PFS = "pfs"


class PfsMode(str, Enum):
    RECURSIVE = "recursive"
    UNROLLED = "unrolled"


DEFAULT_DEPTH_BOUND = 100


@dataclass(frozen=True)
class EncodingConfig:
    property: Property
    pfs_mode: PfsMode | None = None
    depth_bound: int | None = None
    instance_fixing: Mapping[str, int] | None = None
    extra_constraints: tuple[Expr, ...] = ()
    produce_model: bool = True


# -- symbol-map descriptors --------------------------------------------------

@dataclass(frozen=True)
class StateFieldAt:
    step: int
    name: str


@dataclass(frozen=True)
class ParamAt:
    step: int
    name: str


@dataclass(frozen=True)
class InstanceSymbol:
    name: str


@dataclass(frozen=True)
class StepCount:
    pass


@dataclass(frozen=True)
class StateVector:
    """Array-packed state; index i holds field fields[i] (step 0)."""
    fields: tuple[str, ...]


@dataclass(frozen=True)
class ParamArray:
    """Flattened per-step parameters; step k, param j sits at k*len+j."""
    params: tuple[str, ...]


SymbolDescriptor = (StateFieldAt | ParamAt | InstanceSymbol | StepCount
                    | StateVector | ParamArray)


@dataclass(frozen=True)
class SmtScript:
    text: str
    symbol_map: dict[str, SymbolDescriptor]
    config: EncodingConfig


# -- shared pieces -----------------------------------------------------------

def pick_logic(model: Model) -> str:
    """QF_LIA unless the model multiplies symbols anywhere."""
    stack: list[Expr] = [model.valid_pred, model.initial_pred, model.final_pred,
                         model.guard, *model.update.values(),
                         *model.global_constraints]
    while stack:
        node = stack.pop()
        if isinstance(node, App):
            if node.op == "*":
                return "QF_NIA"
            stack.extend(node.args)
    return "QF_LIA"


def render_with(expr: Expr, rename: Mapping[str, str]) -> str:
    """Render an expression, rewriting symbol references through `rename`."""
    if isinstance(expr, Ref) and expr.name in rename:
        return rename[expr.name]
    if isinstance(expr, App):
        inner = " ".join(render_with(a, rename) for a in expr.args)
        return f"({expr.op} {inner})"
    return render_expr(expr)


def _require_valid(model: Model) -> None:
    diagnostics = validate_model(model)
    if diagnostics:
        raise EncodingError("model fails validation: "
                            + "; ".join(str(d) for d in diagnostics))


def _state_args(model: Model) -> str:
    return " ".join(f"({f} Int)" for f in model.state_fields)


def _step_args(model: Model) -> str:
    params = " ".join(f"({p} Int)" for p in model.param_fields)
    return f"{_state_args(model)} {params}".rstrip()


def _prelude_lines(model: Model) -> list[str]:
    lines = []
    for sym in model.instance_symbols:
        lines.append(f"(declare-const {sym} Int)")
    for constraint in model.global_constraints:
        lines.append(f"(assert {render_expr(constraint)})")
    sargs = _state_args(model)
    lines.append(f"(define-fun is-valid ({sargs}) Bool {render_expr(model.valid_pred)})")
    lines.append(f"(define-fun is-initial ({sargs}) Bool {render_expr(model.initial_pred)})")
    lines.append(f"(define-fun is-final ({sargs}) Bool {render_expr(model.final_pred)})")
    stargs = _step_args(model)
    lines.append(f"(define-fun guard-holds ({stargs}) Bool {render_expr(model.guard)})")
    for f in model.state_fields:
        lines.append(f"(define-fun next-{f} ({stargs}) Int {render_expr(model.update[f])})")
    return lines


def emit_prelude(model: Model) -> str:
    """Shared fragment: logic, instance declarations, predicate/transition defs."""
    _require_valid(model)
    return "\n".join([f"(set-logic {pick_logic(model)})"] + _prelude_lines(model)) + "\n"


def _check_name_clashes(model: Model, generated: set[str]) -> None:
    declared = set(model.instance_symbols) | set(model.state_fields) | set(model.param_fields)
    clashes = sorted(declared & generated)
    if clashes:
        raise EncodingError(
            "model symbol(s) collide with names the encoder reserves: "
            + ", ".join(clashes))


def _fixing_lines(model: Model, config: EncodingConfig) -> list[str]:
    fixing = config.instance_fixing or {}
    unknown = sorted(set(fixing) - set(model.instance_symbols))
    if unknown:
        raise ConfigError("instance_fixing names undeclared instance symbol(s): "
                          + ", ".join(unknown))
    lines = []
    for sym in model.instance_symbols:
        if sym in fixing:
            lines.append(f"(assert (= {sym} {render_expr(Lit(fixing[sym]))}))")
    return lines


def _extra_lines(model: Model, config: EncodingConfig, rename: Mapping[str, str]) -> list[str]:
    lines = []
    for expr in config.extra_constraints:
        for name in iter_refs(expr):
            if name not in model.state_fields and name not in model.instance_symbols:
                raise ConfigError(
                    f"extra constraint references '{name}', which is neither an "
                    "instance symbol nor a state field")
        lines.append(f"(assert {render_with(expr, rename)})")
    return lines


def _finish(lines: list[str], config: EncodingConfig) -> str:
    lines.append("(check-sat)")
    if config.produce_model:
        lines.append("(get-model)")
    return "\n".join(lines) + "\n"


def _sname(step: int, field: str) -> str:
    return f"s{step}_{field}"


def _pname(step: int, param: str) -> str:
    return f"p{step}_{param}"


def _svec(model: Model, step: int) -> str:
    return " ".join(_sname(step, f) for f in model.state_fields)


def _stepvec(model: Model, step: int) -> str:
    names = [_sname(step, f) for f in model.state_fields]
    names += [_pname(step, p) for p in model.param_fields]
    return " ".join(names)


def _register(symbol_map: dict[str, SymbolDescriptor], name: str,
              descriptor: SymbolDescriptor) -> None:
    if name in symbol_map:
        raise EncodingError(f"generated symbol '{name}' is not unique; "
                            "rename the model symbol it collides with")
    symbol_map[name] = descriptor


# -- VFS ---------------------------------------------------------------------

def encode_vfs(model: Model, config: EncodingConfig) -> SmtScript:
    """Assert that one unknown state is both valid and final."""
    _require_valid(model)
    if config.property is not Property.VFS:
        raise ConfigError("encode_vfs requires config.property = VFS")
    if config.pfs_mode is not None:
        raise ConfigError("pfs_mode is meaningless for the VFS property")
    _check_name_clashes(model, {_sname(0, f) for f in model.state_fields})
    symbol_map: dict[str, SymbolDescriptor] = {}
    for sym in model.instance_symbols:
        _register(symbol_map, sym, InstanceSymbol(sym))

    lines = [f"(set-logic {pick_logic(model)})",
             f"; transition-system encoding: {model.name}",
             "; property: vfs"]
    lines += _prelude_lines(model)
    lines.append("; candidate state")
    for f in model.state_fields:
        name = _sname(0, f)
        _register(symbol_map, name, StateFieldAt(0, f))
        lines.append(f"(declare-const {name} Int)")
    rename = {f: _sname(0, f) for f in model.state_fields}
    lines += _fixing_lines(model, config)
    lines += _extra_lines(model, config, rename)
    lines.append("; a valid final state exists")
    lines.append(f"(assert (and (is-valid {_svec(model, 0)}) "
                 f"(is-final {_svec(model, 0)})))")
    return SmtScript(_finish(lines, config), symbol_map, config)


# -- PFS, unrolled back-end --------------------------------------------------

def encode_pfs_unrolled(model: Model, config: EncodingConfig) -> SmtScript:
    """Bounded unrolling: sat iff a plan of length at most depth_bound exists."""
    _require_valid(model)
    _check_pfs_config(config, PfsMode.UNROLLED)
    depth = config.depth_bound
    assert depth is not None
    generated = {"n"}
    generated |= {_sname(k, f) for k in range(depth + 1) for f in model.state_fields}
    generated |= {_pname(k, p) for k in range(depth) for p in model.param_fields}
    _check_name_clashes(model, generated)

    symbol_map: dict[str, SymbolDescriptor] = {}
    for sym in model.instance_symbols:
        _register(symbol_map, sym, InstanceSymbol(sym))

    lines = [f"(set-logic {pick_logic(model)})",
             f"; transition-system encoding: {model.name}",
             f"; property: pfs, mode: unrolled, depth bound: {depth}"]
    lines += _prelude_lines(model)
    for k in range(depth + 1):
        lines.append(f"; step {k} state")
        for f in model.state_fields:
            name = _sname(k, f)
            _register(symbol_map, name, StateFieldAt(k, f))
            lines.append(f"(declare-const {name} Int)")
    for k in range(depth):
        lines.append(f"; step {k} parameters")
        for p in model.param_fields:
            name = _pname(k, p)
            _register(symbol_map, name, ParamAt(k, p))
            lines.append(f"(declare-const {name} Int)")
    lines.append("; number of transitions actually taken")
    _register(symbol_map, "n", StepCount())
    lines.append("(declare-const n Int)")
    lines.append("(assert (<= 0 n))")
    lines.append(f"(assert (<= n {depth}))")
    rename = {f: _sname(0, f) for f in model.state_fields}
    lines += _fixing_lines(model, config)
    lines += _extra_lines(model, config, rename)
    lines.append(f"(assert (is-initial {_svec(model, 0)}))")
    for k in range(depth):
        parts = [f"(guard-holds {_stepvec(model, k)})"]
        for f in model.state_fields:
            parts.append(f"(= {_sname(k + 1, f)} (next-{f} {_stepvec(model, k)}))")
        parts.append(f"(is-valid {_svec(model, k + 1)})")
        lines.append(f"(assert (=> (< {k} n) (and {' '.join(parts)})))")
    ends = [f"(and (= n {k}) (is-final {_svec(model, k)}))" for k in range(depth + 1)]
    lines.append("; the path of length n ends in a final state")
    ended = ends[0] if len(ends) == 1 else f"(or {' '.join(ends)})"
    lines.append(f"(assert {ended})")
    return SmtScript(_finish(lines, config), symbol_map, config)


# -- PFS, recursive back-end ---------------------------------------------------

_RECURSIVE_RESERVED = {"state", "n", "p", "valid", "initial", "final",
                       "transition", "tran", "s", "k", "last", "size",
                       "State", "Params"}


def encode_pfs_recursive(model: Model, config: EncodingConfig) -> SmtScript:
    """Array-packed states with a recursive n-step transition function."""
    _require_valid(model)
    _check_pfs_config(config, PfsMode.RECURSIVE)
    depth = config.depth_bound
    assert depth is not None
    _check_name_clashes(model, set(_RECURSIVE_RESERVED))

    fields = model.state_fields
    params = model.param_fields
    stride = len(params)

    symbol_map: dict[str, SymbolDescriptor] = {}
    for sym in model.instance_symbols:
        _register(symbol_map, sym, InstanceSymbol(sym))
    _register(symbol_map, "state", StateVector(fields))
    _register(symbol_map, "n", StepCount())
    _register(symbol_map, "p", ParamArray(params))

    lines = [f"; transition-system encoding: {model.name}",
             f"; property: pfs, mode: recursive, depth bound: {depth}"]
    lines += _prelude_lines(model)
    lines.append("; states and parameter lists are packed into integer arrays")
    lines.append("(define-sort State () (Array Int Int))")
    lines.append("(define-sort Params () (Array Int Int))")
    for i, f in enumerate(fields):
        lines.append(f"(define-fun {f} ((s State)) Int (select s {i}))")
    unpack = " ".join(f"({f} s)" for f in fields)
    lines.append(f"(define-fun valid ((s State)) Bool (is-valid {unpack}))")
    lines.append(f"(define-fun initial ((s State)) Bool (is-initial {unpack}))")
    lines.append(f"(define-fun final ((s State)) Bool (is-final {unpack}))")
    pdecl = "".join(f" ({p} Int)" for p in params)
    pargs = "".join(f" {p}" for p in params)
    lines.append(f"(define-fun guard ((s State){pdecl}) Bool "
                 f"(guard-holds {unpack}{pargs}))")
    packed = "s"
    for i, f in enumerate(fields):
        packed = f"(store {packed} {i} (next-{f} {unpack}{pargs}))"
    lines.append(f"(define-fun transition ((s State){pdecl}) State {packed})")

    # parameters of the current step start at size - stride*k
    base = f"(- size (* {stride} k))"
    selects = [f"(select p {base})" if j == 0 else f"(select p (+ {base} {j}))"
               for j in range(stride)]
    sel = (" " + " ".join(selects)) if selects else ""
    step = f"(transition s{sel})"
    lines.append("; n-step application: threads the last valid state and the "
                 "parameter-list size")
    lines.append(
        "(define-fun-rec tran ((k Int) (s State) (p Params) (last State) (size Int)) State\n"
        "  (ite (<= k 0) s\n"
        f"    (ite (and (guard s{sel}) (valid {step}))\n"
        f"         (tran (- k 1) {step} p {step} size)\n"
        "         last)))")
    lines.append("; every step of the path must pass the guard and stay valid")
    lines.append(
        "(define-fun-rec path-ok ((k Int) (s State) (p Params) (size Int)) Bool\n"
        "  (or (<= k 0)\n"
        f"      (and (guard s{sel}) (valid {step})\n"
        f"           (path-ok (- k 1) {step} p size))))")
    lines.append("(declare-const state State)")
    lines.append("(declare-const n Int)")
    lines.append("(declare-const p Params)")
    lines.append("(assert (<= 0 n))")
    lines.append(f"(assert (<= n {depth}))")
    rename = {f: f"({f} state)" for f in fields}
    lines += _fixing_lines(model, config)
    lines += _extra_lines(model, config, rename)
    lines.append("(assert (initial state))")
    lines.append(f"(assert (path-ok n state p (* {stride} n)))")
    lines.append(f"(assert (final (tran n state p state (* {stride} n))))")
    return SmtScript(_finish(lines, config), symbol_map, config)


def _check_pfs_config(config: EncodingConfig, mode: PfsMode) -> None:
    if config.property is not Property.PFS:
        raise ConfigError("PFS encoder requires config.property = PFS")
    if config.pfs_mode is not mode:
        raise ConfigError(f"config.pfs_mode must be {mode.value} for this encoder")
    if config.depth_bound is None:
        raise ConfigError("PFS encoding requires a depth_bound")
    if config.depth_bound < 0:
        # depth 0 is allowed: it asks whether a zero-length plan exists
        raise ConfigError("depth_bound must not be negative")


def encode(model: Model, config: EncodingConfig) -> SmtScript:
    """Dispatch to the encoder selected by the config."""
    if config.property is Property.VFS:
        return encode_vfs(model, config)
    if config.pfs_mode is PfsMode.RECURSIVE:
        return encode_pfs_recursive(model, config)
    if config.pfs_mode is PfsMode.UNROLLED:
        return encode_pfs_unrolled(model, config)
    raise ConfigError("PFS config needs pfs_mode recursive or unrolled")
