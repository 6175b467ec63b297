"""Textual format for constraint systems.

Grammar (comments run from `#` to end of line):

    vars <ident>+                          declaration order fixes indices
    point <ident> [inv { c (, c)* }]
    mc <ident> <ident> -> <ident> { [c (, c)*] }

    c    ::= <term> <rel> <term>
    term ::= declared variable name, optionally suffixed with '
    rel  ::= <  <=  =  >=  >

Variable names are plain identifiers; point and constraint names may carry
generated suffixes (anything but whitespace, braces, commas or `#`).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from .model import (
    Arc,
    ConstraintSystem,
    Invariant,
    MonotonicityConstraint,
    VarTerm,
    constraint_strings,
)

_VAR_NAME = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_CONSTRAINT = re.compile(r"^(.*?)(<=|>=|=|<|>)(.*)$")


@dataclass(frozen=True)
class SourceSpan:
    line: int  # 1-based
    column: int  # 1-based
    length: int

    def __str__(self) -> str:
        return f"{self.line}:{self.column}"


@dataclass(frozen=True)
class Token:
    text: str
    span: SourceSpan


class ParseError(ValueError):
    def __init__(self, message: str, span: SourceSpan | None = None):
        self.span = span
        self.message = message
        where = f"{span}: " if span else ""
        super().__init__(f"{where}{message}")


_PUNCT = {"{", "}", ","}


def _tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0]
        col = 0
        while col < len(body):
            ch = body[col]
            if ch.isspace():
                col += 1
                continue
            if ch in _PUNCT:
                tokens.append(Token(ch, SourceSpan(lineno, col + 1, 1)))
                col += 1
                continue
            start = col
            while col < len(body) and not body[col].isspace() and body[col] not in _PUNCT:
                col += 1
            tokens.append(Token(body[start:col], SourceSpan(lineno, start + 1, col - start)))
    return tokens


class _Cursor:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> Token | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def next(self, expected: str | None = None) -> Token:
        tok = self.peek()
        if tok is None:
            last = self.tokens[-1].span if self.tokens else SourceSpan(1, 1, 0)
            raise ParseError(
                f"unexpected end of input{f', expected {expected!r}' if expected else ''}",
                last,
            )
        self.pos += 1
        if expected is not None and tok.text != expected:
            raise ParseError(f"expected {expected!r}, found {tok.text!r}", tok.span)
        return tok


def _parse_constraint_group(cur: _Cursor) -> list[list[Token]]:
    """Tokens between { and }, split on commas."""
    cur.next("{")
    groups: list[list[Token]] = [[]]
    while True:
        tok = cur.peek()
        if tok is None:
            raise ParseError("unterminated '{' block", cur.tokens[-1].span)
        if tok.text == "}":
            cur.next()
            break
        if tok.text == ",":
            cur.next()
            groups.append([])
            continue
        groups[-1].append(cur.next())
    if groups == [[]]:
        return []
    for g in groups:
        if not g:
            raise ParseError("empty constraint between commas", cur.tokens[cur.pos - 1].span)
    return groups


def _constraint_to_arcs(
    tokens: list[Token], names: dict[str, int], allow_primed: bool
) -> list[Arc]:
    joined = "".join(t.text for t in tokens)
    span = tokens[0].span
    m = _CONSTRAINT.match(joined)
    if not m or not m.group(1) or not m.group(3):
        raise ParseError(f"cannot parse constraint {joined!r}", span)
    lhs_text, rel, rhs_text = m.group(1), m.group(2), m.group(3)

    def term(text: str) -> VarTerm:
        primed = text.endswith("'")
        base = text[:-1] if primed else text
        if base not in names:
            raise ParseError(f"undeclared variable {base!r}", span)
        if primed and not allow_primed:
            raise ParseError(f"primed term {text!r} not allowed in an invariant", span)
        return VarTerm(names[base], primed)

    lhs, rhs = term(lhs_text), term(rhs_text)
    if rel == "<":
        pairs = [(rhs, lhs, True)]
    elif rel == "<=":
        pairs = [(rhs, lhs, False)]
    elif rel == ">":
        pairs = [(lhs, rhs, True)]
    elif rel == ">=":
        pairs = [(lhs, rhs, False)]
    else:  # equality desugars to both non-strict directions
        pairs = [(lhs, rhs, False), (rhs, lhs, False)]
    arcs = []
    for src, dst, strict in pairs:
        if src == dst and not strict:
            continue  # vacuous x >= x
        arcs.append(Arc(src, dst, strict))
    return arcs


def parse_system(text: str) -> ConstraintSystem:
    """Parse the DSL; raises ParseError with a source span on failure."""
    cur = _Cursor(_tokenize(text))
    names: dict[str, int] = {}
    var_names: list[str] = []
    points: dict[str, Invariant] = {}
    mc_specs: list[tuple[Token, Token, Token, list[list[Token]]]] = []

    while cur.peek() is not None:
        head = cur.next()
        if head.text == "vars":
            if var_names:
                raise ParseError("duplicate vars declaration", head.span)
            while cur.peek() is not None and cur.peek().text not in (
                "vars",
                "point",
                "mc",
            ):
                tok = cur.next()
                if not _VAR_NAME.match(tok.text):
                    raise ParseError(f"invalid variable name {tok.text!r}", tok.span)
                if tok.text in names:
                    raise ParseError(f"duplicate variable {tok.text!r}", tok.span)
                names[tok.text] = len(var_names) + 1
                var_names.append(tok.text)
            if not var_names:
                raise ParseError("vars declaration names no variables", head.span)
        elif head.text == "point":
            pid = cur.next()
            if pid.text in points:
                raise ParseError(f"duplicate point {pid.text!r}", pid.span)
            inv_arcs: list[Arc] = []
            if cur.peek() is not None and cur.peek().text == "inv":
                cur.next()
                for group in _parse_constraint_group(cur):
                    inv_arcs.extend(_constraint_to_arcs(group, names, allow_primed=False))
            points[pid.text] = Invariant(frozenset(inv_arcs))
        elif head.text == "mc":
            mc_name = cur.next()
            src = cur.next()
            cur.next("->")
            dst = cur.next()
            groups = _parse_constraint_group(cur)
            mc_specs.append((mc_name, src, dst, groups))
        else:
            raise ParseError(
                f"expected 'vars', 'point' or 'mc', found {head.text!r}", head.span
            )

    if not var_names:
        raise ParseError("missing vars declaration", SourceSpan(1, 1, 0))

    mcs = []
    for mc_name, src, dst, groups in mc_specs:
        for endpoint in (src, dst):
            if endpoint.text not in points:
                raise ParseError(f"undeclared point {endpoint.text!r}", endpoint.span)
        arcs: list[Arc] = []
        for group in groups:
            arcs.extend(_constraint_to_arcs(group, names, allow_primed=True))
        mcs.append(
            MonotonicityConstraint(mc_name.text, src.text, dst.text, frozenset(arcs))
        )
    return ConstraintSystem(len(var_names), tuple(var_names), points, tuple(mcs))


def format_system(cs: ConstraintSystem) -> str:
    """Canonical text form; parsing it back yields a structurally equal
    system (modulo the semantic closed flag, which the DSL does not carry)."""
    lines = ["vars " + " ".join(cs.var_names)]
    for pid, inv in cs.points.items():
        if inv.trivial:
            lines.append(f"point {pid}")
        else:
            body = ", ".join(constraint_strings(inv.arcs, cs.var_names))
            lines.append(f"point {pid} inv {{ {body} }}")
    for g in cs.mcs:
        body = ", ".join(constraint_strings(g.arcs, cs.var_names))
        inner = f" {body} " if body else ""
        lines.append(f"mc {g.name} {g.src_point} -> {g.dst_point} {{{inner}}}")
    return "\n".join(lines) + "\n"
