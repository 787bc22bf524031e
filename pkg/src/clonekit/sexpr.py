"""S-expression text format for terms.

Grammar (single spaces, no trailing whitespace)::

    term   := "(v " INDEX ")" | "(" SYMBOL (" " term)+ ")"
    SYMBOL := "med" N | "mnk:" N ":" K | "oracle:" LABEL ":" N

Variables are 0-indexed. ``parse_sexpr(to_sexpr(t)) is t`` for every term.
"""

from __future__ import annotations

import re
from typing import Optional

from .errors import ParseError
from .term import Symbol, Term, make_application, med, mnk, oracle, postorder, var

_TOKEN = re.compile(r"\(|\)|[^\s()]+")
_MED = re.compile(r"med([1-9][0-9]*)\Z")
_MNK = re.compile(r"mnk:([1-9][0-9]*):([1-9][0-9]*)\Z")
_ORACLE = re.compile(r"oracle:([^:\s()]+):([1-9][0-9]*)\Z")
_INDEX = re.compile(r"(0|[1-9][0-9]*)\Z")


def parse_symbol(name: str) -> Symbol:
    try:
        if m := _MED.match(name):
            return med(int(m[1]))
        if m := _MNK.match(name):
            return mnk(int(m[1]), int(m[2]))
        if m := _ORACLE.match(name):
            return oracle(m[1], int(m[2]))
    except ValueError as exc:
        raise ParseError(f"bad symbol {name!r}: {exc}") from None
    raise ParseError(f"unknown symbol {name!r}")


def to_sexpr(t: Term, limit: Optional[int] = None) -> str:
    """Print ``t`` as a tree (shared subterms are repeated).

    With ``limit`` the text is cut to that many characters plus ``...``.
    """
    text: dict[Term, str] = {}
    for node in postorder(t):
        if node.is_variable:
            text[node] = f"(v {node.index})"
        else:
            parts = [node.symbol.name]
            parts.extend(text[c] for c in node.children)
            s = "(" + " ".join(parts) + ")"
            if limit is not None and len(s) > limit:
                s = s[:limit] + "..."
            text[node] = s
    return text[t]


def parse_sexpr(source: str) -> Term:
    tokens = _TOKEN.findall(source)
    if not tokens:
        raise ParseError("empty input")
    # each frame: [head token or None, children]
    stack: list[list] = []
    result: Optional[Term] = None
    pos = 0
    while pos < len(tokens):
        tok = tokens[pos]
        pos += 1
        if result is not None:
            raise ParseError(f"trailing input at token {pos}: {tok!r}")
        if tok == "(":
            if pos >= len(tokens) or tokens[pos] in "()":
                raise ParseError(f"expected symbol after '(' at token {pos}")
            stack.append([tokens[pos], []])
            pos += 1
        elif tok == ")":
            if not stack:
                raise ParseError(f"unbalanced ')' at token {pos}")
            head, args = stack.pop()
            node = _build(head, args)
            if stack:
                stack[-1][1].append(node)
            else:
                result = node
        else:
            if not stack:
                raise ParseError(f"bare atom {tok!r} outside a list")
            stack[-1][1].append(tok)
    if stack or result is None:
        raise ParseError("unexpected end of input")
    return result


def _build(head: str, args: list) -> Term:
    if head == "v":
        if len(args) != 1 or not isinstance(args[0], str) or not _INDEX.match(args[0]):
            raise ParseError(f"variable needs one natural-number index, got {args!r}")
        return var(int(args[0]))
    symbol = parse_symbol(head)
    if any(isinstance(a, str) for a in args):
        raise ParseError(f"bare atom inside application of {head}")
    if len(args) != symbol.arity:
        raise ParseError(f"{head} takes {symbol.arity} arguments, got {len(args)}")
    return make_application(symbol, args)
