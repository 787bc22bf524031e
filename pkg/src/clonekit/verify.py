"""Brute-force checkers: exhaustive equality, majority auditing, cascade simulation.

All exhaustive checks enumerate tuples in lexicographic order and report the
lexicographically least counterexample, whatever the number of workers.
"""

from __future__ import annotations

import itertools
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Mapping, Optional, Sequence

import numpy as np

from . import core
from .constructions import BoundSequence, boosting_bound, med3_from_medn, next_frequency
from .errors import BudgetExceededError, DomainError, EvenArityError, NotApplicableError
from .sexpr import to_sexpr
from .term import Term, evaluate_table, postorder

DEFAULT_EVAL_BUDGET = 10**8
DEFAULT_WIDTH_BUDGET = 10**6
CHUNK = 1 << 16

Bindings = Mapping[str, core.FunctionTable]


def default_eval_budget() -> int:
    return int(os.environ.get("CLONEKIT_EVAL_BUDGET", DEFAULT_EVAL_BUDGET))


def default_width_budget() -> int:
    return int(os.environ.get("CLONEKIT_WIDTH_BUDGET", DEFAULT_WIDTH_BUDGET))


@dataclass
class VerificationReport:
    subject: str
    check: str
    chain_sizes: tuple[int, ...]
    tuples_checked: int
    passed: bool
    counterexample: Optional[tuple] = None
    chain_size: Optional[int] = None
    expected: Optional[Any] = None
    actual: Optional[Any] = None
    elapsed: float = 0.0
    detail: str = ""

    def __bool__(self):
        return self.passed

    def to_dict(self, timing: bool = False) -> dict[str, Any]:
        out = {
            "subject": self.subject,
            "check": self.check,
            "chain_sizes": list(self.chain_sizes),
            "tuples_checked": self.tuples_checked,
            "verdict": "pass" if self.passed else "fail",
        }
        if not self.passed:
            out["counterexample"] = None if self.counterexample is None else list(self.counterexample)
            out["chain_size"] = self.chain_size
            out["expected"] = self.expected
            out["actual"] = self.actual
        if self.detail:
            out["detail"] = self.detail
        if timing:
            out["elapsed"] = round(self.elapsed, 6)
        return out

    def summary(self) -> str:
        head = f"{self.check} [{self.subject}] on d={','.join(map(str, self.chain_sizes))}: "
        if self.passed:
            return head + f"pass ({self.tuples_checked} tuples, {self.elapsed:.3f}s)" + (
                f"; {self.detail}" if self.detail else ""
            )
        return head + (
            f"FAIL at {self.counterexample} (d={self.chain_size}): "
            f"expected {self.expected}, got {self.actual}" + (f"; {self.detail}" if self.detail else "")
        )


def combine(reports: Sequence[VerificationReport]) -> VerificationReport:
    """Merge per-chain-size reports of one check; the first failure wins."""
    first = reports[0]
    failed = next((r for r in reports if not r.passed), None)
    merged = VerificationReport(
        subject=first.subject,
        check=first.check,
        chain_sizes=tuple(d for r in reports for d in r.chain_sizes),
        tuples_checked=sum(r.tuples_checked for r in reports),
        passed=failed is None,
        elapsed=sum(r.elapsed for r in reports),
    )
    if failed is not None:
        merged.counterexample = failed.counterexample
        merged.chain_size = failed.chain_size
        merged.expected, merged.actual, merged.detail = failed.expected, failed.actual, failed.detail
    return merged


def _subject(t: Term) -> str:
    return to_sexpr(t, limit=120)


def _check_eval_budget(arity: int, chain_size: int, budget: Optional[int]) -> int:
    if chain_size < 2:
        raise DomainError(f"chain size must be >= 2, got {chain_size}")
    budget = default_eval_budget() if budget is None else budget
    total = chain_size**arity
    if total > budget:
        raise BudgetExceededError(
            f"{chain_size}^{arity} = {total} assignments exceeds the evaluation budget {budget}; "
            "for identities between median terms use the Boolean evaluator (evaluate_all_boolean)"
        )
    return total


def _scan(
    t: Term,
    chain_size: int,
    arity: int,
    bindings: Optional[Bindings],
    expect: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]],
    workers: int,
    chunk: int,
) -> Optional[tuple[int, int, int]]:
    """First mismatch as (index, expected, actual), scanning shards in parallel.

    ``expect(block)`` returns ``(want, constrained)`` for the tuples of ``block``.
    """
    total = chain_size**arity

    def shard(lo: int, hi: int):
        for a in range(lo, hi, chunk):
            b = min(hi, a + chunk)
            got = evaluate_table(t, chain_size, bindings, arity, a, b)
            want, constrained = expect(core.tuple_block(arity, chain_size, a, b))
            bad = np.flatnonzero(constrained & (got != want))
            if bad.size:
                i = int(bad[0])
                return a + i, int(want[i]), int(got[i])
        return None

    workers = max(1, min(workers, total))
    bounds = [total * w // workers for w in range(workers + 1)]
    if workers == 1:
        results = [shard(0, total)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(shard, bounds[:-1], bounds[1:]))
    found = [r for r in results if r is not None]
    return min(found) if found else None


def _report(t_subject, check, chain_size, arity, total, hit, started) -> VerificationReport:
    report = VerificationReport(t_subject, check, (chain_size,), total, hit is None)
    if hit is not None:
        idx, want, got = hit
        report.counterexample = core.decode(idx, arity, chain_size)
        report.chain_size = chain_size
        report.expected, report.actual = want, got
    report.elapsed = time.perf_counter() - started
    return report


def exhaustive_equal(
    t: Term,
    reference: tuple[int, int],
    chain_size: int,
    bindings: Optional[Bindings] = None,
    workers: int = 1,
    eval_budget: Optional[int] = None,
    chunk: int = CHUNK,
) -> VerificationReport:
    """Compare ``t`` with the order statistic ``reference = (arity, rank)`` on every tuple."""
    started = time.perf_counter()
    arity, rank = reference
    if not 1 <= rank <= arity:
        raise core.InvalidRankError(f"rank {rank} outside 1..{arity}")
    if t.arity > arity:
        raise DomainError(f"term uses {t.arity} variables, reference has arity {arity}")
    total = _check_eval_budget(arity, chain_size, eval_budget)

    def expect(block):
        want = np.sort(block, axis=0)[rank - 1]
        return want, np.ones(want.shape, dtype=bool)

    hit = _scan(t, chain_size, arity, bindings, expect, workers, chunk)
    return _report(_subject(t), f"equal m^{arity}_{rank}", chain_size, arity, total, hit, started)


def check_majority_property(
    t: Term,
    chain_size: int,
    bindings: Optional[Bindings] = None,
    arity: Optional[int] = None,
    workers: int = 1,
    eval_budget: Optional[int] = None,
    chunk: int = CHUNK,
) -> VerificationReport:
    """Check that ``t`` returns x on every tuple where x occurs at least ceil((n+1)/2) times."""
    started = time.perf_counter()
    arity = t.arity if arity is None else arity
    total = _check_eval_budget(arity, chain_size, eval_budget)

    def expect(block):
        return core.majority_values_block(block, chain_size)

    hit = _scan(t, chain_size, arity, bindings, expect, workers, chunk)
    return _report(_subject(t), f"majority/{arity}", chain_size, arity, total, hit, started)


# -- majority oracles -----------------------------------------------------------


@dataclass(frozen=True)
class AdversarialMajorityTable:
    """A majority function whose values off the majority tuples are seeded noise."""

    arity: int
    chain_size: int
    seed: int
    table: core.FunctionTable


def make_adversarial_majority(n: int, d: int, seed: int) -> AdversarialMajorityTable:
    if n < 3 or d < 2:
        raise NotApplicableError(f"adversarial tables need n >= 3 and d >= 2, got n={n}, d={d}")
    rng = np.random.default_rng(seed)
    block = core.tuple_block(n, d)
    values, present = core.majority_values_block(block, d)
    noise = rng.integers(0, d, size=block.shape[1])
    return AdversarialMajorityTable(n, d, seed, core.FunctionTable(n, d, np.where(present, values, noise)))


def oracle_arities(t: Term) -> dict[str, int]:
    found: dict[str, int] = {}
    for node in postorder(t):
        s = node.symbol
        if s is not None and s.kind == "oracle":
            if found.setdefault(s.label, s.arity) != s.arity:
                raise DomainError(f"oracle {s.label!r} used with arities {found[s.label]} and {s.arity}")
    return found


def majority_bindings(t: Term, chain_size: int, seed: Optional[int] = None) -> dict[str, core.FunctionTable]:
    """Bind every oracle in ``t`` to a majority table on the chain.

    ``seed=None`` gives :func:`core.majority_table`; otherwise an adversarial table.
    """
    out = {}
    for label, arity in oracle_arities(t).items():
        if seed is None:
            out[label] = core.majority_table(arity, chain_size)
        else:
            out[label] = make_adversarial_majority(arity, chain_size, seed).table
    return out


# -- the med_3 cascade ----------------------------------------------------------


@dataclass
class CascadeStep:
    step: int
    width: int
    values: np.ndarray
    median_count: int
    below: int
    above: int


def _triples(m: int) -> np.ndarray:
    return np.fromiter(
        itertools.chain.from_iterable(itertools.combinations(range(m), 3)), dtype=np.int64, count=3 * math.comb(m, 3)
    ).reshape(-1, 3)


def cascade_layers(rows: np.ndarray, steps: int, width_budget: Optional[int] = None):
    """Yield successive cascade layers of ``rows`` (shape ``(N, width)``), starting with ``rows``."""
    budget = default_width_budget() if width_budget is None else width_budget
    yield rows
    for _ in range(steps):
        m = rows.shape[1]
        width = math.comb(m, 3)
        if width > budget:
            raise BudgetExceededError(f"cascade width C({m},3) = {width} exceeds the width budget {budget}")
        if width == 0:
            raise NotApplicableError(f"cannot take 3-subsets of width {m}")
        idx = _triples(m)
        a, b, c = rows[:, idx[:, 0]], rows[:, idx[:, 1]], rows[:, idx[:, 2]]
        rows = np.maximum(np.minimum(a, b), np.minimum(np.maximum(a, b), c))
        yield rows


def simulate_cascade(start: Sequence[int], steps: int, width_budget: Optional[int] = None) -> list[CascadeStep]:
    """Apply med_3 to all 3-subsets ``steps`` times, tracking the start tuple's median."""
    start = tuple(start)
    if len(start) % 2 == 0:
        raise EvenArityError(f"start tuple needs odd arity to have a median, got {len(start)}")
    target = core.median_odd(start)
    out = []
    rows = np.asarray([start], dtype=np.int64)
    for j, layer in enumerate(cascade_layers(rows, steps, width_budget)):
        v = layer[0]
        out.append(CascadeStep(j, v.size, v, int((v == target).sum()), int((v < target).sum()), int((v > target).sum())))
    return out


# -- bound sequences and the full pipeline ------------------------------------


def check_frequency_recurrence(seq: BoundSequence) -> VerificationReport:
    """Check each step against the raw recurrences, the closed form for r_{j+1} and its lower bound."""
    started = time.perf_counter()
    subject = f"boosting_bound({seq.n_seq[0]})"
    report = VerificationReport(subject, "frequency-recurrence", (), 0, True)
    if len(seq.n_seq) < 2:
        raise NotApplicableError("sequence needs at least two entries")
    for j in range(len(seq.n_seq) - 1):
        n, k, r = seq.n_seq[j], seq.k_seq[j], seq.r_seq[j]
        n1, k1, r1 = seq.n_seq[j + 1], seq.k_seq[j + 1], seq.r_seq[j + 1]
        report.tuples_checked += 1
        problems = []
        if r != Fraction(k) / n or r1 != Fraction(k1) / n1:
            problems.append("r != k/n")
        raw_n, raw_k = next_frequency(n, Fraction(k))
        if (raw_n, raw_k) != (n1, k1):
            problems.append(f"raw recurrence gives n={raw_n}, k={raw_k}")
        closed = r * (3 * (n - 1) ** 2 + 1 - Fraction(k) ** 2) / (2 * (n - 1) * (n - 2))
        if Fraction(k1) / n1 != closed:
            problems.append(f"closed form gives r={closed}")
        lower = r * (Fraction(3, 2) - r**2 / 2 - Fraction(1, n - 1))
        if not Fraction(k1) / n1 >= lower:
            problems.append(f"lower bound {lower} violated")
        if problems:
            report.passed = False
            report.counterexample = (j,)
            report.expected = str(closed)
            report.actual = str(Fraction(k1) / n1)
            report.detail = f"step j={j}: " + "; ".join(problems)
            break
    report.elapsed = time.perf_counter() - started
    return report


def verify_main_theorem_semantics(
    n: int,
    k: int,
    d: int,
    width_budget: Optional[int] = None,
    eval_budget: Optional[int] = None,
    rows_per_chunk: int = 4096,
) -> VerificationReport:
    """med_3 from med_n, then every k-tuple through the cascade and an ideal b-ary majority.

    Passes iff med_3 extraction is exact on the chain and the majority value of
    the final cascade layer exists and equals med_k for every tuple.
    """
    started = time.perf_counter()
    if k % 2 == 0 or k < 3:
        raise EvenArityError(f"target arity must be odd >= 3, got {k}")
    extraction = exhaustive_equal(med3_from_medn(n), (3, 2), d, eval_budget=eval_budget)
    subject = f"med_{k} from med_{n}"
    if not extraction.passed:
        extraction.subject, extraction.check = subject, "pipeline (med_3 extraction)"
        return extraction
    report = VerificationReport(subject, "pipeline", (d,), extraction.tuples_checked, True)
    if k == 3:
        report.detail = "degenerate: med_3 is available after extraction"
        report.elapsed = time.perf_counter() - started
        return report
    bound = boosting_bound(k)
    total = _check_eval_budget(k, d, eval_budget)
    for lo in range(0, total, rows_per_chunk):
        hi = min(total, lo + rows_per_chunk)
        block = core.tuple_block(k, d, lo, hi)
        want = np.sort(block, axis=0)[(k - 1) // 2]
        *_, final = cascade_layers(block.T.copy(), bound.stop_index, width_budget)
        values, present = core.majority_values_block(final.T, d)
        bad = np.flatnonzero(~present | (values != want))
        report.tuples_checked += hi - lo
        if bad.size:
            i = int(bad[0])
            report.passed = False
            report.counterexample = core.decode(lo + i, k, d)
            report.chain_size = d
            report.expected = int(want[i])
            report.actual = int(values[i]) if present[i] else None
            if not present[i]:
                report.detail = f"no majority in the width-{final.shape[1]} layer"
            break
    report.detail = report.detail or f"cascade widths {'->'.join(map(str, bound.n_seq))}"
    report.elapsed = time.perf_counter() - started
    return report
