"""Term builders for the median/majority generation results.

Every builder returns a :class:`~clonekit.term.Term`. Builders that take an
``op`` accept either a :class:`~clonekit.term.Symbol` (usually an oracle
standing for "any majority function") or a previously built term of the right
arity, which is then substituted into.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, NamedTuple, Optional, Union

from .errors import (
    ArityError,
    BudgetExceededError,
    DivergenceError,
    EvenArityError,
    NotApplicableError,
)
from .term import (
    Operation,
    Symbol,
    Term,
    compose,
    default_node_budget,
    internal_nodes,
    make_application,
    med,
    mnk,
    oracle,
    substitute,
    term_stats,
    var,
)

MAJORITY_LABEL = "maj"
DEFAULT_MAX_STEPS = 64


class IntegralityWarning(UserWarning):
    """A frequency lower bound k_j came out non-integral."""


class UnsoundRouteWarning(UserWarning):
    """A majority route uses a boost to an even arity."""


# -- identification of variables ---------------------------------------------


def remainder(n: int, k: int) -> int:
    if k < 1 or n < 1:
        raise ValueError(f"remainder needs n, k >= 1, got n={n}, k={k}")
    return n % k


def almost_divisible(n: int, k: int) -> bool:
    """True iff ``R <= n/k`` or ``(k-1) - R <= n/k`` with ``R = n mod k``."""
    r = remainder(n, k)
    q = Fraction(n, k)
    return r <= q or (k - 1) - r <= q


def _fmt(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def almost_divisible_failure(n: int, k: int) -> Optional[str]:
    """Human-readable reason why ``n`` is not almost divisible by ``k``, or None."""
    if almost_divisible(n, k):
        return None
    r = remainder(n, k)
    q = _fmt(Fraction(n, k))
    return f"not almost divisible: R={r} > {q} and (k-1)-R={(k - 1) - r} > {q}"


def identification_multiplicities(n: int, k: int) -> list[int]:
    """Variable ``j`` (1-based) is repeated floor(n/k)+1 times if j <= n mod k, else floor(n/k) times."""
    q, r = divmod(n, k)
    return [q + 1 if j <= r else q for j in range(1, k + 1)]


def identify(op: Operation, multiplicities: list[int]) -> Term:
    """Apply ``op`` to v0 repeated ``multiplicities[0]`` times, then v1, and so on."""
    children = [var(j) for j, m in enumerate(multiplicities) for _ in range(m)]
    return compose(op, children)


def _require_odd(name: str, n: int, minimum: int = 3) -> None:
    if n % 2 == 0:
        raise EvenArityError(f"{name} must be odd, got {n}")
    if n < minimum:
        raise NotApplicableError(f"{name} must be >= {minimum}, got {n}")


def identify_median(n: int, k: int) -> Term:
    """med_k as med_n applied to repeated variables, when n is almost divisible by k."""
    _require_odd("n", n, 1)
    _require_odd("k", k, 1)
    if k > n:
        raise NotApplicableError(f"k={k} exceeds n={n}")
    reason = almost_divisible_failure(n, k)
    if reason:
        raise NotApplicableError(reason)
    return identify(med(n), identification_multiplicities(n, k))


def med3_from_medn(n: int) -> Term:
    """med_n(x1, x2, ..., x2, x3, ..., x3) with x2 and x3 each repeated (n-1)/2 times."""
    _require_odd("n", n)
    half = (n - 1) // 2
    return identify(med(n), [1, half, half])


# -- majority functions -------------------------------------------------------


def majority_symbol(n: int, label: str = MAJORITY_LABEL) -> Symbol:
    return oracle(label, n)


def _as_op(op: Union[Operation, int]) -> Operation:
    return majority_symbol(op) if isinstance(op, int) else op


def maj3_from_majn(op: Union[Operation, int]) -> Term:
    op = _as_op(op)
    n = op.arity
    if n < 5:
        raise NotApplicableError(f"ternary extraction needs arity >= 5, got {n}")
    return identify(op, identification_multiplicities(n, 3))


def even_majority_from_odd(op: Union[Operation, int]) -> Term:
    """maj_n(x1..xn) = maj_{n+1}(x1, ..., xn, xn) for even n."""
    op = _as_op(op)
    n = op.arity - 1
    if n < 2 or n % 2:
        raise ArityError(f"needs an odd source arity >= 3 (even target n >= 2), got source arity {op.arity}")
    return compose(op, [var(i) for i in range(n)] + [var(n - 1)])


def _boost_applications(n: int) -> int:
    # (n-2) z_j's with (n-2) gammas each, plus the root
    return (n - 2) * (n - 2) + (n - 2) + 1


def boost_majority_by_two(op: Union[Operation, int], node_budget: Optional[int] = None) -> Term:
    """A depth-three composition of an (n-2)-ary majority operation that is n-ary majority.

    For 2 <= j <= n-1 and 1 <= i <= n-1, i != j (1-based), gamma(i, j) drops
    x_i and x_{i+1} when j != i+1, and x_i and x_{i+2} when j == i+1.
    z_j = op(gamma(i, j) for increasing i != j) and the result is
    op(z_2, ..., z_{n-1}).

    For odd n the result is a majority term for every (n-2)-ary majority
    oracle. For even n it is not: with the oracle m^4_2 (a 4-ary majority
    function) the n = 6 term maps (0, 0, 1, 1, 1, 1) to 0. Each z_j then has
    only n/2 - 1 arguments guaranteed to equal the majority value, one short
    of what an (n-2)-ary majority needs.
    """
    op = _as_op(op)
    n = op.arity + 2
    if n < 5:
        raise NotApplicableError(f"boosting needs target arity >= 5, got {n}")
    budget = default_node_budget() if node_budget is None else node_budget
    estimate = _boost_applications(n) * internal_nodes(op) + n
    if estimate > budget:
        raise BudgetExceededError(f"boost to arity {n} may need {estimate} nodes, budget is {budget}")

    gammas: dict[tuple[int, int], Term] = {}

    def gamma(i: int, j: int) -> Term:
        drop = (i, i + 2) if j == i + 1 else (i, i + 1)
        if drop not in gammas:
            gammas[drop] = compose(op, [var(p - 1) for p in range(1, n + 1) if p not in drop])
        return gammas[drop]

    zs = [compose(op, [gamma(i, j) for i in range(1, n) if i != j]) for j in range(2, n)]
    return compose(op, zs)


def route_runs(n: int, k: int, allow_even_boosts: bool = False) -> list[tuple[str, int, int]]:
    """Like :func:`majority_route`, with consecutive boosts merged into one run.

    A run ``("+2", a, b)`` stands for the boosts a -> a+2 -> ... -> b. The
    list has at most five entries however large ``k`` is.
    """
    if n < 3 or k < 3:
        raise NotApplicableError(f"majority routing needs arities >= 3, got {n} -> {k}")
    runs: list[tuple[str, int, int]] = []
    cur = n

    def climb(start: int) -> None:
        top = k if (k - start) % 2 == 0 else k + 1
        if top > start:
            runs.append(("+2", start, top))
        if top != k:
            runs.append(("-1", top, k))

    if cur == k:
        return runs
    if cur == 4:
        runs.append(("+2", 4, 6))
        cur = 6
    if k >= cur and (cur % 2 == 1 or (allow_even_boosts and k % 2 == 0)):
        climb(cur)
    elif cur != k:
        runs.append(("->3", cur, 3))
        climb(3)
    return runs


def majority_route(n: int, k: int, allow_even_boosts: bool = False) -> list[tuple[str, int, int]]:
    """Steps turning an n-ary majority operation into a k-ary one.

    Each step is ``(kind, from_arity, to_arity)`` with kind ``"+2"`` (boost),
    ``"-1"`` (odd to even) or ``"->3"`` (ternary extraction).

    Boosting to an even arity is not sound for every oracle (see
    :func:`boost_majority_by_two`), so by default an even source of arity
    >= 6 is first reduced to arity 3. ``allow_even_boosts=True`` boosts even sources
    directly. A 4-ary source has no other route and is always boosted to 6.
    """
    steps: list[tuple[str, int, int]] = []
    for kind, frm, to in route_runs(n, k, allow_even_boosts):
        if kind == "+2":
            steps.extend(("+2", m, m + 2) for m in range(frm, to, 2))
        else:
            steps.append((kind, frm, to))
    return steps


def _run_label(run: tuple[str, int, int]) -> str:
    kind, frm, to = run
    if kind == "+2" and to - frm > 2:
        return f"+2 x{(to - frm) // 2} {frm}->{to}"
    return f"{kind} {frm}->{to}"


def _route_estimate(op_internal: int, runs: list[tuple[str, int, int]], cap: int) -> Optional[int]:
    """Estimated internal nodes of the routed term, or None once it passes ``cap``."""
    nodes = op_internal
    for kind, frm, to in runs:
        if kind != "+2":
            continue
        for m in range(frm + 2, to + 1, 2):
            nodes *= _boost_applications(m)
            if nodes > cap:
                return None
    return nodes


def _chain_stage(op: Operation, k: int, runs, budget: int, materializable: bool) -> "Stage":
    estimate = _route_estimate(internal_nodes(op), runs, budget)
    return Stage(
        "majority-chain",
        op.arity,
        k,
        materializable,
        {"steps": [_run_label(r) for r in runs],
         "estimated_nodes": str(estimate) if estimate is not None else f">{budget}"},
    )


def majority_any_arity(
    source: Union[Operation, int], k: int, node_budget: Optional[int] = None
) -> Term:
    """A k-ary majority term over ``source`` (an n-ary majority operation).

    Raises :class:`BudgetExceededError` whose ``stage`` is the majority-chain
    :class:`Stage` when the term would not fit in the node budget.
    """
    op = _as_op(source)
    runs = route_runs(op.arity, k)
    if any(kind == "+2" and to % 2 == 0 for kind, _, to in runs):
        warnings.warn(
            f"route {op.arity} -> {k} boosts to an even arity; the result is not a majority "
            "term for every oracle",
            UnsoundRouteWarning,
            stacklevel=2,
        )
    budget = default_node_budget() if node_budget is None else node_budget
    if _route_estimate(internal_nodes(op), runs, budget) is None:
        stage = _chain_stage(op, k, runs, budget, False)
        raise BudgetExceededError(
            f"majority chain {op.arity} -> {k} exceeds the node budget {budget}", stage=stage
        )
    cur: Operation = op
    for kind, _, to in majority_route(op.arity, k):
        if kind == "+2":
            cur = boost_majority_by_two(cur, budget)
        elif kind == "-1":
            cur = even_majority_from_odd(cur)
        else:
            cur = maj3_from_majn(cur)
    if isinstance(cur, Symbol):
        cur = make_application(cur, [var(i) for i in range(k)])
    return cur


# -- the med_3 cascade and its frequency bound --------------------------------


@dataclass(frozen=True)
class BoundSequence:
    """Exact widths n_j, worst-case median counts k_j and frequencies r_j = k_j / n_j.

    ``stop_index`` is the first j with r_j > 1/2 and ``bound`` is n at that index.
    """

    n_seq: tuple[int, ...]
    k_seq: tuple[Fraction, ...]
    r_seq: tuple[Fraction, ...]
    stop_index: int
    bound: int

    @property
    def start(self) -> int:
        return self.n_seq[0]

    @property
    def degenerate(self) -> bool:
        # n = 3 collapses to a single triple; med_3 is already available
        return self.bound < self.start

    def to_dict(self) -> dict[str, Any]:
        return {
            "n": str(self.start),
            "n_seq": [str(x) for x in self.n_seq],
            "k_seq": [_fmt(x) for x in self.k_seq],
            "r_seq": [_fmt(x) for x in self.r_seq],
            "stop_index": self.stop_index,
            "bound": str(self.bound),
            "degenerate": self.degenerate,
        }


def _choose(x: Fraction, r: int) -> Fraction:
    out = Fraction(1)
    for i in range(r):
        out *= x - i
    return out / math.factorial(r)


def next_frequency(n_j: int, k_j: Fraction) -> tuple[int, Fraction]:
    """One cascade step: (C(n_j, 3), C(k,3) + C(k,2)(n-k) + k((n-k)/2)^2)."""
    rest = n_j - k_j
    k_next = _choose(k_j, 3) + _choose(k_j, 2) * rest + k_j * (rest / 2) ** 2
    return math.comb(n_j, 3), k_next


def boosting_bound(n: int, max_steps: int = DEFAULT_MAX_STEPS) -> BoundSequence:
    _require_odd("n", n)
    half = Fraction(1, 2)
    n_seq, k_seq, r_seq = [n], [Fraction(1)], [Fraction(1, n)]
    while not r_seq[-1] > half:
        if len(n_seq) > max_steps:
            raise DivergenceError(f"r_j did not exceed 1/2 within {max_steps} steps for n={n}")
        n_next, k_next = next_frequency(n_seq[-1], k_seq[-1])
        if k_next.denominator != 1:
            warnings.warn(
                f"k_{len(k_seq)} = {_fmt(k_next)} is not an integer for n={n}",
                IntegralityWarning,
                stacklevel=2,
            )
        n_seq.append(n_next)
        k_seq.append(k_next)
        r_seq.append(k_next / n_next)
    j = len(n_seq) - 1
    return BoundSequence(tuple(n_seq), tuple(k_seq), tuple(r_seq), j, n_seq[j])


def cascade_layer(inputs: list[Term], median3: Operation = None) -> list[Term]:
    """``median3`` applied to every 3-subset of ``inputs``, in lexicographic subset order."""
    median3 = med(3) if median3 is None else median3
    return [compose(median3, list(c)) for c in itertools.combinations(inputs, 3)]


def cascade_step_term(m: int, node_budget: Optional[int] = None) -> list[Term]:
    if m < 3:
        raise NotApplicableError(f"cascade width must be >= 3, got {m}")
    budget = default_node_budget() if node_budget is None else node_budget
    size = math.comb(m, 3) + m
    if size > budget:
        raise BudgetExceededError(f"cascade step from width {m} needs {size} nodes, budget is {budget}")
    return cascade_layer([var(i) for i in range(m)])


# -- planning the general case ------------------------------------------------


@dataclass
class Stage:
    """One step of a :class:`Plan`; ``details`` holds JSON-ready kind-specific data."""

    kind: str
    input_arity: int
    output_arity: int
    materializable: bool
    details: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "input_arity": self.input_arity,
            "output_arity": self.output_arity,
            "materializable": self.materializable,
            **self.details,
        }


@dataclass
class Plan:
    """How med_k is obtained from med_n.

    Arities chain through the stages: each stage turns an operation of
    ``input_arity`` into one of ``output_arity``. On the boosting route the
    order is med_n -> med_3 -> maj_b -> (root majority, b) -> k-ary term, the
    last stage filling the b argument slots with the cascade outputs.
    """

    source: int
    target: int
    stages: list[Stage]
    term: Optional[Term] = None
    bound: Optional[BoundSequence] = None

    @property
    def materializable(self) -> bool:
        return all(s.materializable for s in self.stages)

    def composes(self) -> bool:
        if not self.stages or self.stages[0].input_arity != self.source:
            return False
        if self.stages[-1].output_arity != self.target:
            return False
        return all(a.output_arity == b.input_arity for a, b in zip(self.stages, self.stages[1:]))

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "source": self.source,
            "target": self.target,
            "materializable": self.materializable,
            "stages": [s.to_dict() for s in self.stages],
        }
        if self.bound is not None:
            out["bound"] = self.bound.to_dict()
        if self.term is not None:
            stats = term_stats(self.term)
            out["term_stats"] = {"arity": stats.arity, "node_count": stats.node_count, "depth": stats.depth}
        return out


def plan_medk_from_medn(n: int, k: int, node_budget: Optional[int] = None) -> Plan:
    _require_odd("n", n)
    _require_odd("k", k)
    budget = default_node_budget() if node_budget is None else node_budget
    half = (n - 1) // 2
    extract = Stage("med3-extraction", n, 3, True, {"multiplicities": [1, half, half]})

    if k == 3:
        return Plan(n, k, [extract], term=med3_from_medn(n))
    if k <= n and almost_divisible(n, k):
        stage = Stage("direct-identification", n, k, True,
                      {"multiplicities": identification_multiplicities(n, k)})
        return Plan(n, k, [stage], term=identify_median(n, k))

    bound = boosting_bound(k)
    b = bound.bound
    med3_term = med3_from_medn(n)
    runs = route_runs(3, b)
    try:
        maj_b = majority_any_arity(med3_term, b, budget)
    except BudgetExceededError:
        maj_b = None
    chain = _chain_stage(med3_term, b, runs, budget, maj_b is not None)
    final = Stage("final-majority", b, b, maj_b is not None, {"majority_arity": str(b)})
    cascade_nodes = sum(bound.n_seq[1:]) + k
    cascade = Stage(
        "cascade", b, k, cascade_nodes <= budget,
        {"widths": [str(x) for x in bound.n_seq], "nodes": str(cascade_nodes)},
    )
    plan = Plan(n, k, [extract, chain, final, cascade], bound=bound)
    if plan.materializable:
        layer = [var(i) for i in range(k)]
        for _ in range(bound.stop_index):
            layer = cascade_layer(layer, med3_term)
        plan.term = substitute(maj_b, dict(enumerate(layer)))
    return plan


# -- non-minimality of the other order statistics -----------------------------


class Witness(NamedTuple):
    term: Term
    label: str  # "min" or "max"


def nonminimality_witness(n: int, k: int) -> Witness:
    """m^n_k(x, ..., x, y, ..., y) with x repeated floor(n/2) times: min_2 or max_2."""
    if n < 4:
        raise NotApplicableError(f"needs n >= 4, got {n}")
    if 2 <= k <= n // 2:
        label = "min"
    elif (n + 1) // 2 < k < n:
        label = "max"
    else:
        raise NotApplicableError(f"k={k} is the min, max or median rank of arity {n}")
    return Witness(identify(mnk(n, k), [n // 2, n - n // 2]), label)


@dataclass(frozen=True)
class Classification:
    n: int
    k: int
    minimal: bool
    label: str  # min | max | median when minimal, else the witness label
    witness: Optional[Term] = None

    def __str__(self):
        if self.minimal:
            return f"Minimal({self.label})"
        from .sexpr import to_sexpr

        return f"NotMinimal({self.label}_2: {to_sexpr(self.witness)})"


def is_minimal_rank(n: int, k: int) -> bool:
    return k == 1 or k == n or (n % 2 == 1 and 2 * k == n + 1)


def classify_mnk(n: int, k: int) -> Classification:
    if n < 2 or not 1 <= k <= n:
        raise NotApplicableError(f"classification needs n >= 2 and 1 <= k <= n, got n={n}, k={k}")
    if k == 1:
        return Classification(n, k, True, "min")
    if k == n:
        return Classification(n, k, True, "max")
    if n % 2 == 1 and 2 * k == n + 1:
        return Classification(n, k, True, "median")
    w = nonminimality_witness(n, k)
    return Classification(n, k, False, w.label, w.term)


def med3_from_half_median(n: int, which: str = "lower") -> Term:
    """med_3 from the lower median m^n_{n/2} or upper median m^n_{n/2+1}, even n >= 6."""
    if which not in ("lower", "upper"):
        raise ValueError(f"which must be 'lower' or 'upper', got {which!r}")
    if n % 2:
        raise ArityError(f"half medians need even arity, got {n}")
    if n < 6:
        raise NotApplicableError(f"half medians generate med_3 only for n >= 6, got {n}")
    rank = n // 2 if which == "lower" else n // 2 + 1
    return identify(mnk(n, rank), identification_multiplicities(n, 3))
