"""Finite chains, order statistics and majority predicates.

A finite chain of size ``d`` is the set ``{0, 1, ..., d - 1}`` with the usual
order; chain values are plain ints and tuples over the chain are plain tuples.
Everything here is the semantic ground truth that constructed terms are
checked against.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Iterator, Optional, Sequence

import numpy as np

from .errors import DomainError, EvenArityError, InvalidRankError

ChainValue = int
ChainTuple = tuple[int, ...]


def check_tuple(t: Sequence[int], chain_size: int) -> ChainTuple:
    """Return ``t`` as a tuple after checking every value lies in the chain."""
    t = tuple(t)
    if not t:
        raise DomainError("tuples must have arity >= 1")
    for v in t:
        if not 0 <= v < chain_size:
            raise DomainError(f"value {v} outside chain of size {chain_size}")
    return t


def all_tuples(arity: int, chain_size: int) -> Iterator[ChainTuple]:
    """All ``chain_size ** arity`` tuples in lexicographic order."""
    return itertools.product(range(chain_size), repeat=arity)


def encode(t: Sequence[int], chain_size: int) -> int:
    """Mixed-radix index of ``t``; the first coordinate is most significant.

    With this encoding index order is lexicographic tuple order.
    """
    idx = 0
    for v in t:
        idx = idx * chain_size + v
    return idx


def decode(idx: int, arity: int, chain_size: int) -> ChainTuple:
    out = []
    for _ in range(arity):
        idx, v = divmod(idx, chain_size)
        out.append(v)
    return tuple(reversed(out))


def tuple_block(arity: int, chain_size: int, lo: int = 0, hi: Optional[int] = None) -> np.ndarray:
    """Digits of the tuples with indices ``lo <= i < hi`` as an ``(arity, hi - lo)`` array.

    Row ``i`` holds coordinate ``i`` of every tuple in the block.
    """
    if hi is None:
        hi = chain_size**arity
    idx = np.arange(lo, hi, dtype=np.int64)
    rows = np.empty((arity, hi - lo), dtype=np.int64)
    for pos in range(arity - 1, -1, -1):
        idx, rows[pos] = np.divmod(idx, chain_size)
    return rows


def order_statistic(t: Sequence[int], k: int) -> int:
    """The ``k``-th smallest component of ``t`` counting multiplicity (1-based)."""
    n = len(t)
    if not 1 <= k <= n:
        raise InvalidRankError(f"rank {k} outside 1..{n}")
    return sorted(t)[k - 1]


def median_odd(t: Sequence[int]) -> int:
    n = len(t)
    if n % 2 == 0:
        raise EvenArityError(f"median needs odd arity, got {n}")
    return order_statistic(t, (n + 1) // 2)


def majority_threshold(n: int) -> int:
    """Least multiplicity that counts as a majority among ``n`` values, i.e. ceil((n+1)/2)."""
    return n // 2 + 1


def majority_value(t: Sequence[int]) -> Optional[int]:
    """The value occurring at least ``ceil((n+1)/2)`` times, or None."""
    value, count = Counter(t).most_common(1)[0]
    return value if count >= majority_threshold(len(t)) else None


def lattice_order_statistic(t: Sequence[int], k: int) -> int:
    """Meet over all ``k``-element index subsets of the join of the selected components.

    Subsets use distinct indices. On a chain the meet is ``min`` and the join is
    ``max``, and the result coincides with :func:`order_statistic`.
    """
    n = len(t)
    if not 1 <= k <= n:
        raise InvalidRankError(f"rank {k} outside 1..{n}")
    return min(max(t[j] for j in subset) for subset in itertools.combinations(range(n), k))


@dataclass(frozen=True, eq=False)
class FunctionTable:
    """A total ``arity``-ary operation on the chain of size ``chain_size``.

    ``entries[encode(t)]`` is the value at ``t``.
    """

    arity: int
    chain_size: int
    entries: np.ndarray

    def __post_init__(self):
        if self.arity < 1 or self.chain_size < 1:
            raise DomainError("arity and chain size must be >= 1")
        entries = np.asarray(self.entries, dtype=np.int64)
        if entries.shape != (self.chain_size**self.arity,):
            raise DomainError(
                f"table for arity {self.arity} on chain {self.chain_size} needs "
                f"{self.chain_size ** self.arity} entries, got shape {entries.shape}"
            )
        if entries.size and (entries.min() < 0 or entries.max() >= self.chain_size):
            raise DomainError("table values outside the chain")
        entries = entries.copy()
        entries.flags.writeable = False
        object.__setattr__(self, "entries", entries)

    @classmethod
    def from_function(cls, arity: int, chain_size: int, fn: Callable[[ChainTuple], int]) -> "FunctionTable":
        return cls(arity, chain_size, np.fromiter((fn(t) for t in all_tuples(arity, chain_size)), dtype=np.int64))

    def __call__(self, *args: int) -> int:
        return int(self.entries[encode(check_tuple(args, self.chain_size), self.chain_size)])

    def __getitem__(self, t: Sequence[int]) -> int:
        return self(*t)

    def __eq__(self, other):
        if not isinstance(other, FunctionTable):
            return NotImplemented
        return (
            self.arity == other.arity
            and self.chain_size == other.chain_size
            and np.array_equal(self.entries, other.entries)
        )

    __hash__ = None


def order_statistic_table(arity: int, k: int, chain_size: int) -> FunctionTable:
    if not 1 <= k <= arity:
        raise InvalidRankError(f"rank {k} outside 1..{arity}")
    block = np.sort(tuple_block(arity, chain_size), axis=0)
    return FunctionTable(arity, chain_size, block[k - 1])


def median_table(arity: int, chain_size: int) -> FunctionTable:
    if arity % 2 == 0:
        raise EvenArityError(f"median needs odd arity, got {arity}")
    return order_statistic_table(arity, (arity + 1) // 2, chain_size)


def majority_values_block(block: np.ndarray, chain_size: int) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized :func:`majority_value` over the columns of ``block``.

    Returns ``(values, present)``; ``values`` is meaningful only where ``present``.
    """
    n = block.shape[0]
    counts = np.stack([(block == v).sum(axis=0) for v in range(chain_size)])
    values = counts.argmax(axis=0)
    present = counts.max(axis=0) >= majority_threshold(n)
    return values, present


def majority_table(arity: int, chain_size: int) -> FunctionTable:
    """The plain majority operation: the majority value, else the first argument."""
    block = tuple_block(arity, chain_size)
    values, present = majority_values_block(block, chain_size)
    return FunctionTable(arity, chain_size, np.where(present, values, block[0]))


def majority_violation(f: FunctionTable) -> Optional[ChainTuple]:
    """Lexicographically least tuple with a majority value that ``f`` does not return.

    None means ``f`` is a majority function.
    """
    block = tuple_block(f.arity, f.chain_size)
    values, present = majority_values_block(block, f.chain_size)
    bad = np.flatnonzero(present & (values != f.entries))
    if bad.size == 0:
        return None
    return decode(int(bad[0]), f.arity, f.chain_size)


def is_majority_function(f: FunctionTable) -> tuple[bool, Optional[ChainTuple]]:
    """``(True, None)`` for a majority function, else ``(False, witness)``."""
    witness = majority_violation(f)
    return witness is None, witness
