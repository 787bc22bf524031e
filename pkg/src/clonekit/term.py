"""Hash-consed term DAGs over order-statistic, median and oracle symbols.

Terms are built with :func:`var` and :func:`app` (aliases :func:`make_variable`
and :func:`make_application`). Structurally identical terms are the *same*
Python object, so equality is identity and shared subterms are evaluated once.
"""

from __future__ import annotations

import os
import re
import threading
import weakref
from dataclasses import dataclass
from typing import Iterable, Mapping, NamedTuple, Optional, Sequence, Union

import numpy as np

from . import core
from .errors import (
    ArityError,
    BudgetExceededError,
    DomainError,
    InvalidRankError,
    EvenArityError,
    MissingBindingError,
    SubstitutionError,
)

DEFAULT_NODE_BUDGET = 10**6
DEFAULT_BOOLEAN_LIMIT = 20

_ORACLE_LABEL = re.compile(r"[A-Za-z_][A-Za-z0-9_.\-]*\Z")


def default_node_budget() -> int:
    return int(os.environ.get("CLONEKIT_NODE_BUDGET", DEFAULT_NODE_BUDGET))


@dataclass(frozen=True)
class Symbol:
    """A function symbol: ``kind`` is ``"med"``, ``"mnk"`` or ``"oracle"``.

    ``rank`` is the 1-based order-statistic rank (set for ``med`` and ``mnk``),
    ``label`` the oracle's binding name.
    """

    kind: str
    arity: int
    rank: Optional[int] = None
    label: Optional[str] = None

    def __post_init__(self):
        if self.arity < 1:
            raise ArityError(f"symbol arity must be >= 1, got {self.arity}")
        if self.kind == "med":
            if self.arity % 2 == 0:
                raise EvenArityError(f"median symbol needs odd arity, got {self.arity}")
            if self.rank != (self.arity + 1) // 2:
                raise InvalidRankError("median symbol rank must be (n+1)/2")
        elif self.kind == "mnk":
            if self.rank is None or not 1 <= self.rank <= self.arity:
                raise InvalidRankError(f"rank {self.rank} outside 1..{self.arity}")
        elif self.kind == "oracle":
            if not self.label or not _ORACLE_LABEL.match(self.label):
                raise ValueError(f"bad oracle label {self.label!r}")
        else:
            raise ValueError(f"unknown symbol kind {self.kind!r}")

    @property
    def name(self) -> str:
        if self.kind == "med":
            return f"med{self.arity}"
        if self.kind == "mnk":
            return f"mnk:{self.arity}:{self.rank}"
        return f"oracle:{self.label}:{self.arity}"

    @property
    def is_order_statistic(self) -> bool:
        return self.kind != "oracle"

    def __str__(self):
        return self.name


def med(n: int) -> Symbol:
    return Symbol("med", n, (n + 1) // 2)


def mnk(n: int, k: int) -> Symbol:
    return Symbol("mnk", n, k)


def oracle(label: str, arity: int) -> Symbol:
    return Symbol("oracle", arity, label=label)


class Term:
    """A node of a hash-consed term DAG.

    Never instantiate directly; use :func:`var` and :func:`app`.
    """

    __slots__ = ("symbol", "children", "index", "arity", "depth", "__weakref__")

    symbol: Optional[Symbol]
    children: tuple["Term", ...]
    index: Optional[int]
    arity: int
    depth: int

    @property
    def is_variable(self) -> bool:
        return self.symbol is None

    def __repr__(self):
        from .sexpr import to_sexpr

        text = to_sexpr(self, limit=200)
        return f"Term({text})"

    def __reduce__(self):
        # rebuild through the constructors so unpickled terms are canonical
        from .sexpr import parse_sexpr, to_sexpr

        return parse_sexpr, (to_sexpr(self),)


_table: "weakref.WeakValueDictionary[tuple, Term]" = weakref.WeakValueDictionary()
_lock = threading.Lock()


def _intern(key, build) -> Term:
    with _lock:
        node = _table.get(key)
        if node is None:
            node = build()
            _table[key] = node
        return node


def make_variable(i: int) -> Term:
    if not isinstance(i, int) or i < 0:
        raise ValueError(f"variable index must be a natural number, got {i!r}")

    def build():
        t = Term.__new__(Term)
        t.symbol, t.children, t.index, t.arity, t.depth = None, (), i, i + 1, 0
        return t

    return _intern(("v", i), build)


def make_application(symbol: Symbol, children: Sequence[Term]) -> Term:
    children = tuple(children)
    if len(children) != symbol.arity:
        raise ArityError(f"{symbol.name} takes {symbol.arity} arguments, got {len(children)}")
    for c in children:
        if not isinstance(c, Term):
            raise TypeError(f"children must be Terms, got {type(c).__name__}")

    def build():
        t = Term.__new__(Term)
        t.symbol, t.children, t.index = symbol, children, None
        t.arity = max(c.arity for c in children)
        t.depth = 1 + max(c.depth for c in children)
        return t

    return _intern((symbol, children), build)


var = make_variable


def app(symbol: Symbol, *children: Term) -> Term:
    return make_application(symbol, children)


def variables(n: int) -> list[Term]:
    return [var(i) for i in range(n)]


def postorder(t: Term) -> list[Term]:
    """Unique nodes of ``t``, children before parents."""
    seen: set[Term] = set()
    order: list[Term] = []
    stack: list[tuple[Term, bool]] = [(t, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if node in seen:
            continue
        seen.add(node)
        stack.append((node, True))
        for c in reversed(node.children):
            if c not in seen:
                stack.append((c, False))
    return order


class TermStats(NamedTuple):
    arity: int
    node_count: int
    depth: int


def term_stats(t: Term) -> TermStats:
    return TermStats(t.arity, len(postorder(t)), t.depth)


def symbols_in(t: Term) -> set[Symbol]:
    return {node.symbol for node in postorder(t) if node.symbol is not None}


def variable_indices(t: Term) -> set[int]:
    return {node.index for node in postorder(t) if node.is_variable}


def substitute(t: Term, replacement: Mapping[int, Term]) -> Term:
    """Simultaneously replace variable ``i`` by ``replacement[i]``."""
    out: dict[Term, Term] = {}
    for node in postorder(t):
        if node.is_variable:
            try:
                out[node] = replacement[node.index]
            except KeyError:
                raise SubstitutionError(f"no replacement for variable {node.index}") from None
        else:
            out[node] = make_application(node.symbol, [out[c] for c in node.children])
    return out[t]


Operation = Union[Symbol, Term]


def compose(op: Operation, children: Sequence[Term]) -> Term:
    """Apply ``op`` to ``children``: a symbol is applied, a term is substituted into."""
    if isinstance(op, Symbol):
        return make_application(op, children)
    if len(children) != op.arity:
        raise ArityError(f"operation of arity {op.arity} applied to {len(children)} arguments")
    return substitute(op, dict(enumerate(children)))


def _check_bindings(t_nodes: Iterable[Term], chain_size: int, bindings: Optional[Mapping[str, core.FunctionTable]]):
    bindings = bindings or {}
    for node in t_nodes:
        s = node.symbol
        if s is None or s.kind != "oracle":
            continue
        table = bindings.get(s.label)
        if table is None:
            raise MissingBindingError(f"oracle {s.label!r} is not bound")
        if table.arity != s.arity:
            raise ArityError(f"oracle {s.label!r} has arity {s.arity}, table has {table.arity}")
        if table.chain_size != chain_size:
            raise DomainError(
                f"oracle {s.label!r} is tabled on a chain of size {table.chain_size}, evaluating on {chain_size}"
            )
    return bindings


def evaluate(
    t: Term,
    values: Sequence[int],
    chain_size: Optional[int] = None,
    bindings: Optional[Mapping[str, core.FunctionTable]] = None,
) -> int:
    """Value of ``t`` at one assignment, memoized over shared nodes."""
    values = tuple(values)
    if chain_size is None:
        chain_size = max(values) + 1
    core.check_tuple(values, chain_size)
    if len(values) < t.arity:
        raise DomainError(f"assignment of length {len(values)} does not cover arity {t.arity}")
    nodes = postorder(t)
    bindings = _check_bindings(nodes, chain_size, bindings)
    memo: dict[Term, int] = {}
    for node in nodes:
        if node.is_variable:
            memo[node] = values[node.index]
            continue
        args = [memo[c] for c in node.children]
        s = node.symbol
        if s.kind == "oracle":
            memo[node] = int(bindings[s.label].entries[core.encode(args, chain_size)])
        else:
            memo[node] = core.order_statistic(args, s.rank)
    return memo[t]


def evaluate_table(
    t: Term,
    chain_size: int,
    bindings: Optional[Mapping[str, core.FunctionTable]] = None,
    arity: Optional[int] = None,
    lo: int = 0,
    hi: Optional[int] = None,
) -> np.ndarray:
    """Values of ``t`` on the tuples with lexicographic indices ``lo <= i < hi``.

    ``arity`` (default ``t.arity``) fixes the tuple length, so a term may be
    evaluated as an operation of larger arity than the variables it uses.
    """
    if arity is None:
        arity = t.arity
    if arity < t.arity:
        raise DomainError(f"arity {arity} does not cover the term's variables (needs {t.arity})")
    nodes = postorder(t)
    bindings = _check_bindings(nodes, chain_size, bindings)
    block = core.tuple_block(arity, chain_size, lo, hi)
    memo: dict[Term, np.ndarray] = {}
    for node in nodes:
        if node.is_variable:
            memo[node] = block[node.index]
            continue
        s = node.symbol
        args = [memo[c] for c in node.children]
        if s.kind == "oracle":
            idx = np.zeros(block.shape[1], dtype=np.int64)
            for a in args:
                idx = idx * chain_size + a
            memo[node] = bindings[s.label].entries[idx]
        elif s.arity == 1:
            memo[node] = args[0]
        else:
            stacked = np.stack(args)
            memo[node] = np.partition(stacked, s.rank - 1, axis=0)[s.rank - 1]
    return memo[t]


def _pack(bits: np.ndarray) -> np.ndarray:
    padded = np.zeros(-(-bits.size // 64) * 64, dtype=np.uint8)
    padded[: bits.size] = bits
    return np.packbits(padded, bitorder="little").view("<u8")


def _unpack(words: np.ndarray, size: int) -> np.ndarray:
    return np.unpackbits(words.view(np.uint8), bitorder="little")[:size]


def _threshold(args: list[np.ndarray], at_least: int) -> np.ndarray:
    """Packed bits set where at least ``at_least`` of ``args`` are set."""
    zero = np.zeros_like(args[0])
    counts = [zero] * (at_least + 1)
    for x in args:
        for c in range(at_least, 1, -1):
            counts[c] = counts[c] | (counts[c - 1] & x)
        counts[1] = counts[1] | x
    return counts[at_least]


def evaluate_all_boolean(
    t: Term,
    arity: Optional[int] = None,
    bindings: Optional[Mapping[str, core.FunctionTable]] = None,
    limit: int = DEFAULT_BOOLEAN_LIMIT,
) -> np.ndarray:
    """Truth table of ``t`` over the 2-element chain, as a 0/1 array of length ``2**arity``.

    Entries are in lexicographic assignment order. Each node is computed on
    64-bit packed words covering all assignments at once.
    """
    if arity is None:
        arity = t.arity
    if arity < t.arity:
        raise DomainError(f"arity {arity} does not cover the term's variables (needs {t.arity})")
    if arity > limit:
        raise BudgetExceededError(f"arity {arity} exceeds the Boolean evaluation limit {limit}")
    nodes = postorder(t)
    bindings = _check_bindings(nodes, 2, bindings)
    size = 1 << arity
    idx = np.arange(size, dtype=np.int64)
    memo: dict[Term, np.ndarray] = {}
    for node in nodes:
        if node.is_variable:
            memo[node] = _pack(((idx >> (arity - 1 - node.index)) & 1).astype(np.uint8))
            continue
        s = node.symbol
        args = [memo[c] for c in node.children]
        if s.kind == "oracle":
            code = np.zeros(size, dtype=np.int64)
            for a in args:
                code = code * 2 + _unpack(a, size)
            memo[node] = _pack(bindings[s.label].entries[code].astype(np.uint8))
        elif s.arity == 3 and s.rank == 2:
            a, b, c = args
            memo[node] = (a & b) | (a & c) | (b & c)
        else:
            # the k-th smallest bit is 1 iff at most k-1 inputs are 0
            memo[node] = _threshold(args, s.arity - s.rank + 1)
    return _unpack(memo[t], size)


def internal_nodes(op: Operation) -> int:
    if isinstance(op, Symbol):
        return 1
    return sum(1 for node in postorder(op) if not node.is_variable)
