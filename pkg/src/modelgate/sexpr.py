"""Span-tracking s-expression reader.

Shared by the model-file parser and the solver-output decoder.  The reader
is deliberately permissive about atom shapes (any run of non-delimiter
characters); callers impose their own vocabulary.  Parsing is iterative,
so adversarial inputs (a megabyte of open parens) cannot blow the stack.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ModelGateError


@dataclass(frozen=True)
class SourceSpan:
    line: int    # 1-based
    column: int  # 1-based
    length: int

    def __str__(self) -> str:
        return f"{self.line}:{self.column}"


@dataclass(frozen=True)
class SAtom:
    text: str
    span: SourceSpan


@dataclass(frozen=True)
class SList:
    items: tuple["SNode", ...]
    span: SourceSpan


SNode = SAtom | SList


class SexprError(ModelGateError):
    def __init__(self, message: str, span: SourceSpan):
        super().__init__(f"{span}: {message}")
        self.message = message
        self.span = span


_DELIMS = frozenset("() \t\r\n;\"")


def tokenize(source: str):
    """Yield (kind, text, span) with kind in {'(', ')', 'atom', 'string'}."""
    i = 0
    line = 1
    col = 1
    n = len(source)
    while i < n:
        ch = source[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == ";":
            # comment runs to end of line
            while i < n and source[i] != "\n":
                i += 1
                col += 1
            continue
        span_start = (line, col)
        if ch in "()":
            yield ch, ch, SourceSpan(line, col, 1)
            i += 1
            col += 1
            continue
        if ch == '"':
            j = i + 1
            while j < n:
                if source[j] == '"':
                    if j + 1 < n and source[j + 1] == '"':  # SMT-LIB escaped quote
                        j += 2
                        continue
                    break
                j += 1
            if j >= n:
                raise SexprError("unterminated string literal",
                                 SourceSpan(line, col, n - i))
            text = source[i:j + 1]
            yield "string", text, SourceSpan(line, col, len(text))
            for c in text:
                if c == "\n":
                    line += 1
                    col = 1
                else:
                    col += 1
            i = j + 1
            continue
        j = i
        while j < n and source[j] not in _DELIMS:
            j += 1
        text = source[i:j]
        yield "atom", text, SourceSpan(span_start[0], span_start[1], len(text))
        col += len(text)
        i = j


def read_all(source: str) -> list[SNode]:
    """Parse a whole document into a list of top-level nodes."""
    top: list[SNode] = []
    # stack of (items, opening span) for every unclosed list
    stack: list[tuple[list[SNode], SourceSpan]] = []
    for kind, text, span in tokenize(source):
        if kind == "(":
            stack.append(([], span))
        elif kind == ")":
            if not stack:
                raise SexprError("unmatched ')'", span)
            items, open_span = stack.pop()
            node = SList(tuple(items), open_span)
            (stack[-1][0] if stack else top).append(node)
        else:
            node = SAtom(text, span)
            (stack[-1][0] if stack else top).append(node)
    if stack:
        _, open_span = stack[-1]
        raise SexprError("unclosed '('", open_span)
    return top


def render(node: SNode) -> str:
    if isinstance(node, SAtom):
        return node.text
    return "(" + " ".join(render(item) for item in node.items) + ")"
