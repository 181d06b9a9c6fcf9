"""Parser and serializer for the `.tsm` model format.

The format is s-expression based with SMT-LIB operator spellings, so a
model file reads like the scripts generated from it.  Top-level forms:

    (model NAME)
    (instance (NAME Int) ...)      optional
    (state (NAME Int) ...)
    (params (NAME Int) ...)        optional
    (valid EXPR) (initial EXPR) (final EXPR) (guard EXPR)
    (update (FIELD EXPR) ...)
    (constrain EXPR)               repeatable

Comments run from ';' to end of line.  The full grammar lives in
docs/dsl-grammar.md.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import ModelGateError
from .expr import BOOL, INT, App, BoolLit, Expr, Lit, Ref, check_arity
from .model import Model, validate_model
from .sexpr import SAtom, SList, SNode, SexprError, SourceSpan, read_all

# Magnitudes above this are rejected so concrete evaluation stays within
# machine-friendly integers.
MAX_LITERAL = 2**63 - 1

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
_INT_TOKEN = re.compile(r"-?[0-9]+\Z")

_FORMS = ("model", "instance", "state", "params",
          "valid", "initial", "final", "guard", "update", "constrain")
_REQUIRED = ("model", "state", "valid", "initial", "final", "guard", "update")
_PRED_SCOPES = {"valid": "state", "initial": "state", "final": "state", "guard": "step"}
_RESERVED = frozenset(_FORMS) | {"+", "-", "*", "=", "distinct", "<", "<=", ">", ">=",
                                 "and", "or", "not", "=>", "ite", "true", "false",
                                 "Int", "Bool"}


@dataclass(frozen=True)
class ParseError:
    span: SourceSpan
    message: str
    expected: tuple[str, ...] = ()

    def __str__(self) -> str:
        note = f" (expected {', '.join(self.expected)})" if self.expected else ""
        return f"{self.span}: {self.message}{note}"


class ModelSyntaxError(ModelGateError):
    """Raised by parse_model; carries every collected ParseError."""

    def __init__(self, errors: list[ParseError]):
        super().__init__("; ".join(str(e) for e in errors))
        self.errors = errors


class _Bail(Exception):
    """Internal: abort the current form after recording its error."""


_ORIGIN = SourceSpan(1, 1, 1)


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.errors: list[ParseError] = []

    def fail(self, span: SourceSpan, message: str, expected: tuple[str, ...] = ()):
        self.errors.append(ParseError(span, message, expected))
        raise _Bail

    def note(self, span: SourceSpan, message: str, expected: tuple[str, ...] = ()):
        self.errors.append(ParseError(span, message, expected))

    # -- declarations ------------------------------------------------------

    def decl_list(self, form: SList, taken: dict[str, SourceSpan]) -> tuple[str, ...]:
        names: list[str] = []
        for item in form.items[1:]:
            try:
                names.append(self.one_decl(item, taken))
            except _Bail:
                pass
        return tuple(names)

    def one_decl(self, node: SNode, taken: dict[str, SourceSpan]) -> str:
        if not isinstance(node, SList) or len(node.items) != 2:
            self.fail(node.span, "declaration must look like (NAME Int)")
        name_node, sort_node = node.items
        name = self.identifier(name_node)
        if not isinstance(sort_node, SAtom) or sort_node.text != "Int":
            self.fail(sort_node.span, "only the Int sort is supported", ("Int",))
        if name in taken:
            self.fail(name_node.span,
                      f"'{name}' is already declared at {taken[name]}")
        taken[name] = name_node.span
        return name

    def identifier(self, node: SNode) -> str:
        if not isinstance(node, SAtom):
            self.fail(node.span, "expected an identifier")
        if not _IDENT.match(node.text):
            self.fail(node.span, f"'{node.text}' is not a valid identifier")
        if node.text in _RESERVED:
            self.fail(node.span, f"'{node.text}' is a reserved word")
        return node.text

    # -- expressions -------------------------------------------------------

    def expr(self, node: SNode, scope: frozenset[str]) -> tuple[Expr, str]:
        """Build an expression and its sort, reporting errors with spans."""
        if isinstance(node, SAtom):
            text = node.text
            if _INT_TOKEN.match(text):
                value = int(text)
                if abs(value) > MAX_LITERAL:
                    self.fail(node.span,
                              f"integer literal out of range (|value| must be <= {MAX_LITERAL})")
                return Lit(value), INT
            if text == "true":
                return BoolLit(True), BOOL
            if text == "false":
                return BoolLit(False), BOOL
            if text in scope:
                return Ref(text), INT
            self.fail(node.span, f"unknown symbol '{text}'")
        assert isinstance(node, SList)
        if not node.items:
            self.fail(node.span, "empty expression")
        head = node.items[0]
        if not isinstance(head, SAtom):
            self.fail(head.span, "operator expected")
        op = head.text
        raw_args = node.items[1:]
        if op == "ite":
            if len(raw_args) != 3:
                self.fail(node.span, f"'ite' takes 3 arguments, got {len(raw_args)}")
            cond, cond_sort = self.expr(raw_args[0], scope)
            if cond_sort != BOOL:
                self.fail(raw_args[0].span, "'ite' condition must be boolean")
            then, then_sort = self.expr(raw_args[1], scope)
            els, els_sort = self.expr(raw_args[2], scope)
            if then_sort != els_sort:
                self.fail(raw_args[2].span, "'ite' branches must have the same sort")
            return App("ite", (cond, then, els)), then_sort
        try:
            check_arity(op, len(raw_args))
        except ModelGateError as err:
            expected = () if "unknown operator" not in str(err) else tuple(
                sorted({"+", "-", "*", "=", "distinct", "<", "<=", ">", ">=",
                        "and", "or", "not", "=>", "ite"}))
            self.fail(head.span, str(err), expected)
        arg_sort = INT if op in ("+", "-", "*", "=", "distinct",
                                 "<", "<=", ">", ">=") else BOOL
        result_sort = BOOL if op in ("=", "distinct", "<", "<=", ">", ">=",
                                     "and", "or", "not", "=>") else INT
        args = []
        for raw in raw_args:
            arg, sort = self.expr(raw, scope)
            if sort != arg_sort:
                self.fail(raw.span, f"'{op}' expects {arg_sort} arguments, found {sort}")
            args.append(arg)
        return App(op, tuple(args)), result_sort


def _span_of_doc_start(forms: list[SNode]) -> SourceSpan:
    return forms[0].span if forms else _ORIGIN


def parse_model(source: str) -> Model:
    """Parse a `.tsm` document; raises ModelSyntaxError listing every problem."""
    parser = _Parser(source)
    try:
        forms = read_all(source)
    except SexprError as err:
        raise ModelSyntaxError([ParseError(err.span, err.message)]) from None
    if not forms:
        raise ModelSyntaxError([ParseError(_ORIGIN, "empty input",
                                           ("(model NAME)",))])

    by_form: dict[str, SList] = {}
    constrains: list[SList] = []
    for node in forms:
        if not isinstance(node, SList) or not node.items:
            parser.note(node.span, "expected a top-level form like (state ...)",
                        _FORMS)
            continue
        head = node.items[0]
        if not isinstance(head, SAtom) or head.text not in _FORMS:
            span = head.span if isinstance(head, SAtom) else node.span
            word = head.text if isinstance(head, SAtom) else "..."
            parser.note(span, f"unknown form '{word}'", _FORMS)
            continue
        if head.text == "constrain":
            constrains.append(node)
        elif head.text in by_form:
            parser.note(head.span, f"duplicate '{head.text}' form "
                        f"(first one at {by_form[head.text].span})")
        else:
            by_form[head.text] = node

    # a misspelled keyword already explains a missing required form
    if not parser.errors:
        missing = [f for f in _REQUIRED if f not in by_form]
        if missing:
            parser.note(_span_of_doc_start(forms),
                        "missing required form(s): " + ", ".join(missing))
    if parser.errors:
        raise ModelSyntaxError(parser.errors)

    taken: dict[str, SourceSpan] = {}
    name = "unnamed"
    try:
        mform = by_form["model"]
        if len(mform.items) != 2:
            parser.fail(mform.span, "model form must be (model NAME)")
        name = parser.identifier(mform.items[1])
    except _Bail:
        pass

    instance = parser.decl_list(by_form["instance"], taken) if "instance" in by_form else ()
    state = parser.decl_list(by_form["state"], taken)
    params = parser.decl_list(by_form["params"], taken) if "params" in by_form else ()
    if not state and not parser.errors:
        parser.note(by_form["state"].span, "a model needs at least one state field")

    state_scope = frozenset(state) | frozenset(instance)
    step_scope = state_scope | frozenset(params)
    instance_scope = frozenset(instance)

    preds: dict[str, Expr] = {}
    for key in ("valid", "initial", "final", "guard"):
        form = by_form[key]
        scope = step_scope if _PRED_SCOPES[key] == "step" else state_scope
        try:
            if len(form.items) != 2:
                parser.fail(form.span, f"{key} form must be ({key} EXPR)")
            expr, sort = parser.expr(form.items[1], scope)
            if sort != BOOL:
                parser.fail(form.items[1].span,
                            f"{key} must be a boolean expression")
            preds[key] = expr
        except _Bail:
            preds[key] = BoolLit(True)

    update: dict[str, Expr] = {}
    uform = by_form["update"]
    for entry in uform.items[1:]:
        try:
            if not isinstance(entry, SList) or len(entry.items) != 2:
                parser.fail(entry.span, "update entry must look like (FIELD EXPR)")
            fname_node, expr_node = entry.items
            if not isinstance(fname_node, SAtom) or fname_node.text not in state:
                word = fname_node.text if isinstance(fname_node, SAtom) else "..."
                parser.fail(fname_node.span,
                            f"'{word}' is not a declared state field", tuple(state))
            fname = fname_node.text
            if fname in update:
                parser.fail(fname_node.span, f"duplicate update for '{fname}'")
            expr, sort = parser.expr(expr_node, step_scope)
            if sort != INT:
                parser.fail(expr_node.span, "update expressions must be integers")
            update[fname] = expr
        except _Bail:
            pass
    if not parser.errors:
        left_out = [f for f in state if f not in update]
        if left_out:
            parser.note(uform.span, "update is missing state field(s): "
                        + ", ".join(left_out))

    constraints: list[Expr] = []
    for form in constrains:
        try:
            if len(form.items) != 2:
                parser.fail(form.span, "constrain form must be (constrain EXPR)")
            expr, sort = parser.expr(form.items[1], instance_scope)
            if sort != BOOL:
                parser.fail(form.items[1].span,
                            "constraints must be boolean expressions")
            constraints.append(expr)
        except _Bail:
            pass

    if parser.errors:
        raise ModelSyntaxError(parser.errors)

    model = Model(name=name, instance_symbols=instance, state_fields=state,
                  param_fields=params, valid_pred=preds["valid"],
                  initial_pred=preds["initial"], final_pred=preds["final"],
                  guard=preds["guard"], update=update,
                  global_constraints=tuple(constraints))
    leftovers = validate_model(model)
    if leftovers:
        raise ModelSyntaxError([ParseError(_ORIGIN, str(d)) for d in leftovers])
    return model


def parse_expr_text(source: str, scope, expected_sort: str = BOOL) -> Expr:
    """Parse one standalone expression (used for --constrain flags)."""
    parser = _Parser(source)
    try:
        nodes = read_all(source)
    except SexprError as err:
        raise ModelSyntaxError([ParseError(err.span, err.message)]) from None
    if len(nodes) != 1:
        raise ModelSyntaxError([ParseError(_ORIGIN, "expected exactly one expression")])
    try:
        expr, sort = parser.expr(nodes[0], frozenset(scope))
        if sort != expected_sort:
            parser.fail(nodes[0].span, f"expected a {expected_sort} expression")
    except _Bail:
        raise ModelSyntaxError(parser.errors) from None
    return expr


# -- serialization ---------------------------------------------------------

def serialize_model(model: Model) -> str:
    """Render a model as `.tsm` text; parse_model inverts this exactly."""
    from .expr import render_expr

    def decls(keyword: str, names) -> str:
        inner = " ".join(f"({n} Int)" for n in names)
        return f"({keyword} {inner})"

    lines = [f"(model {model.name})"]
    if model.instance_symbols:
        lines.append(decls("instance", model.instance_symbols))
    lines.append(decls("state", model.state_fields))
    if model.param_fields:
        lines.append(decls("params", model.param_fields))
    lines.append(f"(valid {render_expr(model.valid_pred)})")
    lines.append(f"(initial {render_expr(model.initial_pred)})")
    lines.append(f"(final {render_expr(model.final_pred)})")
    lines.append(f"(guard {render_expr(model.guard)})")
    lines.append("(update")
    for field in model.state_fields:
        lines.append(f"  ({field} {render_expr(model.update[field])})")
    lines.append(")")
    for constraint in model.global_constraints:
        lines.append(f"(constrain {render_expr(constraint)})")
    return "\n".join(lines) + "\n"
