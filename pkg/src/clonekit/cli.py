"""Command-line front end.

Exit codes: 0 success / verification passed, 1 verification failed,
2 usage, parse, precondition or budget error.

Term files use the S-expression format of :mod:`clonekit.sexpr` (0-indexed
variables ``(v 0)``); human-readable messages number variables x1, x2, ...
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Optional, Sequence

from . import constructions as C
from . import verify as V
from .errors import BudgetExceededError, ClonekitError
from .sexpr import parse_sexpr, to_sexpr
from .term import DEFAULT_NODE_BUDGET, Term, term_stats

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


@dataclass
class Config:
    node_budget: int = DEFAULT_NODE_BUDGET
    eval_budget: int = V.DEFAULT_EVAL_BUDGET
    width_budget: int = V.DEFAULT_WIDTH_BUDGET
    workers: int = 1
    chain_sizes: tuple[int, ...] = (2, 3, 4)
    output_format: str = "text"

    def __post_init__(self):
        for name in ("node_budget", "eval_budget", "width_budget", "workers"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not self.chain_sizes or min(self.chain_sizes) < 2:
            raise ValueError("chain sizes must be >= 2")

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "Config":
        def pick(flag: Optional[int], env: str, default: int) -> int:
            if flag is not None:
                return flag
            return int(os.environ.get(env, default))

        return cls(
            node_budget=pick(args.node_budget, "CLONEKIT_NODE_BUDGET", DEFAULT_NODE_BUDGET),
            eval_budget=pick(args.eval_budget, "CLONEKIT_EVAL_BUDGET", V.DEFAULT_EVAL_BUDGET),
            width_budget=pick(args.width_budget, "CLONEKIT_WIDTH_BUDGET", V.DEFAULT_WIDTH_BUDGET),
            workers=pick(args.workers, "CLONEKIT_WORKERS", 1),
            chain_sizes=tuple(args.chain_sizes) if args.chain_sizes else (2, 3, 4),
            output_format=args.format,
        )


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _frac(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def pretty(t: Term, limit: int = 240) -> str:
    """1-indexed rendering, e.g. ``med5(x1, x2, x2, x3, x3)``."""
    from .term import postorder

    text: dict[Term, str] = {}
    for node in postorder(t):
        if node.is_variable:
            text[node] = f"x{node.index + 1}"
        else:
            s = f"{node.symbol.name}({', '.join(text[c] for c in node.children)})"
            text[node] = s if len(s) <= limit else s[:limit] + "..."
    return text[t]


def _emit(cfg: Config, payload: Any, text: str, stream=None) -> None:
    stream = stream or sys.stdout
    if cfg.output_format == "json":
        stream.write(json.dumps(payload, indent=2) + "\n")
    else:
        stream.write(text.rstrip("\n") + "\n")


def _stats_dict(t: Term) -> dict[str, int]:
    s = term_stats(t)
    return {"arity": s.arity, "node_count": s.node_count, "depth": s.depth}


def _write(path: Optional[str], content: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(content)
    else:
        with open(path, "w") as fh:
            fh.write(content)


# -- build ------------------------------------------------------------------------------------

BUILDERS = (
    "identify-median",
    "med3-from-medn",
    "maj3-from-majn",
    "even-majority-from-odd",
    "boost-majority-by-two",
    "majority-any-arity",
    "cascade-step",
    "nonminimality-witness",
    "half-median",
    "plan",
)


def _need(args, *names):
    missing = [f"--{n}" for n in names if getattr(args, n) is None]
    if missing:
        raise ClonekitError(f"{args.construction} needs {' '.join(missing)}")
    return [getattr(args, n) for n in names]


def cmd_build(args, cfg: Config) -> int:
    name = args.construction
    label = args.oracle_label
    if name == "plan":
        n, k = _need(args, "n", "k")
        plan = C.plan_medk_from_medn(n, k, cfg.node_budget)
        report = plan.to_dict()
        if plan.term is not None:
            report["term"] = to_sexpr(plan.term)
        _write(args.output, json.dumps(report, indent=2) + "\n")
        if args.output not in (None, "-"):
            summary = f"plan med_{k} from med_{n}: {len(plan.stages)} stage(s), materializable={plan.materializable}"
            _emit(cfg, {"materializable": plan.materializable, "stages": len(plan.stages)}, summary)
        return EXIT_OK
    if name == "cascade-step":
        (m,) = _need(args, "m")
        terms = C.cascade_step_term(m, cfg.node_budget)
        _write(args.output, "".join(to_sexpr(t) + "\n" for t in terms))
        info = sys.stdout if args.output not in (None, "-") else sys.stderr
        _emit(cfg, {"terms": len(terms)}, f"{len(terms)} med3 terms over width {m}", info)
        return EXIT_OK

    label_text = ""
    if name == "identify-median":
        n, k = _need(args, "n", "k")
        t = C.identify_median(n, k)
    elif name == "med3-from-medn":
        (n,) = _need(args, "n")
        t = C.med3_from_medn(n)
    elif name == "maj3-from-majn":
        (n,) = _need(args, "n")
        t = C.maj3_from_majn(C.majority_symbol(n, label))
    elif name == "even-majority-from-odd":
        (n,) = _need(args, "n")
        t = C.even_majority_from_odd(C.majority_symbol(n + 1, label))
    elif name == "boost-majority-by-two":
        (n,) = _need(args, "n")
        t = C.boost_majority_by_two(C.majority_symbol(n - 2, label), cfg.node_budget)
    elif name == "majority-any-arity":
        n, k = _need(args, "n", "k")
        try:
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                t = C.majority_any_arity(C.majority_symbol(n, label), k, cfg.node_budget)
            for w in caught:
                print(f"warning: {w.message}", file=sys.stderr)
        except BudgetExceededError as exc:
            if exc.stage is not None:
                _write(args.output, json.dumps(exc.stage.to_dict(), indent=2) + "\n")
            raise
    elif name == "nonminimality-witness":
        n, k = _need(args, "n", "k")
        t, label_text = C.nonminimality_witness(n, k)
    else:  # half-median
        (n,) = _need(args, "n")
        t = C.med3_from_half_median(n, args.which)

    _write(args.output, to_sexpr(t) + "\n")
    stats = _stats_dict(t)
    payload = {"construction": name, **stats}
    text = f"arity={stats['arity']} node_count={stats['node_count']} depth={stats['depth']}"
    if label_text:
        payload["equals"] = f"{label_text}_2"
        text += f" equals={label_text}_2"
    if stats["node_count"] <= 64:
        text += f"\n{pretty(t)}"
    info = sys.stdout if args.output not in (None, "-") else sys.stderr
    _emit(cfg, payload, text, info)
    return EXIT_OK


# -- verify -----------------------------------------------------------------------------------


def parse_reference(spec: str) -> tuple[str, Optional[tuple[int, int]]]:
    """``med:k`` -> order statistic (k, (k+1)/2); ``mnk:n:k``; ``majority``."""
    parts = spec.split(":")
    try:
        if parts == ["majority"]:
            return "majority", None
        if parts[0] == "med" and len(parts) == 2:
            k = int(parts[1])
            if k % 2 == 0 or k < 1:
                raise ValueError
            return "equal", (k, (k + 1) // 2)
        if parts[0] == "mnk" and len(parts) == 3:
            n, k = int(parts[1]), int(parts[2])
            if not 1 <= k <= n:
                raise ValueError
            return "equal", (n, k)
    except ValueError:
        pass
    raise ClonekitError(f"bad reference {spec!r}; use med:<odd k>, mnk:<n>:<k> or majority")


def _read_term(path: str) -> Term:
    if path == "-":
        return parse_sexpr(sys.stdin.read())
    with open(path) as fh:
        return parse_sexpr(fh.read())


def cmd_verify(args, cfg: Config) -> int:
    t = _read_term(args.term)
    mode, ref = parse_reference(args.against)
    seeds: list[Optional[int]]
    if args.seeds is not None:
        seeds = list(range(args.seed or 0, (args.seed or 0) + args.seeds))
    else:
        seeds = [args.seed]
    reports = []
    for seed in seeds:
        per_d = []
        for d in cfg.chain_sizes:
            bindings = V.majority_bindings(t, d, seed)
            if mode == "majority":
                r = V.check_majority_property(t, d, bindings, args.arity, cfg.workers, cfg.eval_budget)
            else:
                r = V.exhaustive_equal(t, ref, d, bindings, cfg.workers, cfg.eval_budget)
            per_d.append(r)
        merged = V.combine(per_d)
        if seed is not None:
            merged.detail = (merged.detail + "; " if merged.detail else "") + f"oracle seed {seed}"
        reports.append(merged)
        if not merged.passed:
            break
    passed = all(r.passed for r in reports)
    payload = {
        "verdict": "pass" if passed else "fail",
        "reports": [r.to_dict(timing=args.timing) for r in reports],
    }
    text = "\n".join(r.summary() for r in reports) + f"\n{'PASS' if passed else 'FAIL'}"
    _emit(cfg, payload, text)
    return EXIT_OK if passed else EXIT_FAIL


# -- bound, classify, cascade-sim ----------------------------------------------------------------


def cmd_bound(args, cfg: Config) -> int:
    seq = C.boosting_bound(args.n, args.max_steps)
    rows = [
        {"j": j, "n_j": str(n), "k_j": _frac(k), "r_j": _frac(r)}
        for j, (n, k, r) in enumerate(zip(seq.n_seq, seq.k_seq, seq.r_seq))
    ]
    payload = {**seq.to_dict(), "rows": rows}
    lines = ["j\tn_j\tk_j\tr_j"]
    lines += [f"{r['j']}\t{r['n_j']}\t{r['k_j']}\t{r['r_j']}" for r in rows]
    if seq.degenerate:
        lines.append(
            f"degenerate: n={args.n} gives n_1 = C(3,3) = 1; med_3 is already available, no cascade is needed"
        )
    lines.append(f"stop j* = {seq.stop_index}")
    lines.append(f"b = {seq.bound}")
    _emit(cfg, payload, "\n".join(lines))
    return EXIT_OK


def _classification_dict(c: C.Classification) -> dict[str, Any]:
    out: dict[str, Any] = {"n": c.n, "k": c.k, "minimal": c.minimal, "label": c.label}
    if c.witness is not None:
        out["witness"] = to_sexpr(c.witness)
    return out


def cmd_classify(args, cfg: Config) -> int:
    if args.table is not None:
        grid = [[C.classify_mnk(n, k) for k in range(1, n + 1)] for n in range(2, args.table + 1)]
        payload = [_classification_dict(c) for row in grid for c in row]
        mark = {"min": "min", "max": "max", "median": "med"}
        lines = ["n\\k " + " ".join(f"{k:>4}" for k in range(1, args.table + 1))]
        for row in grid:
            cells = [mark[c.label] if c.minimal else "-" for c in row]
            lines.append(f"{row[0].n:>3} " + " ".join(f"{x:>4}" for x in cells))
        lines.append("min/max/med: minimal; -: not minimal (generates min_2 or max_2)")
        _emit(cfg, payload, "\n".join(lines))
        return EXIT_OK
    if args.n is None or args.k is None:
        raise ClonekitError("classify needs --n and --k, or --table N")
    c = C.classify_mnk(args.n, args.k)
    text = f"m^{c.n}_{c.k}: {c}"
    if c.witness is not None:
        text += f"\n  {c.label}_2(x1, x2) = {pretty(c.witness)}"
    _emit(cfg, _classification_dict(c), text)
    return EXIT_OK


def _start_tuple(spec: str, n: Optional[int]) -> tuple[int, ...]:
    if spec in ("distinct", "constant"):
        if n is None:
            raise ClonekitError(f"--start {spec} needs --n")
        return tuple(range(1, n + 1)) if spec == "distinct" else (0,) * n
    values = tuple(_int_list(spec))
    if n is not None and len(values) != n:
        raise ClonekitError(f"--start has {len(values)} values but --n is {n}")
    return values


def cmd_cascade_sim(args, cfg: Config) -> int:
    start = _start_tuple(args.start, args.n)
    simulated = V.simulate_cascade(start, args.steps, cfg.width_budget)
    # worst-case lower bounds from a single occurrence of the median
    bounds = [Fraction(1)]
    width = len(start)
    for _ in range(args.steps):
        width, k = C.next_frequency(width, bounds[-1])
        bounds.append(k)
    rows = []
    for s, k in zip(simulated, bounds):
        rows.append(
            {
                "step": s.step,
                "width": s.width,
                "median_count": s.median_count,
                "k_j": _frac(k),
                "below": s.below,
                "above": s.above,
                "meets_bound": s.median_count >= k,
            }
        )
    lines = ["step\twidth\tcount\tk_j\tbelow\tabove"]
    lines += [
        f"{r['step']}\t{r['width']}\t{r['median_count']}\t{r['k_j']}\t{r['below']}\t{r['above']}" for r in rows
    ]
    _emit(cfg, {"start": list(start), "steps": rows}, "\n".join(lines))
    return EXIT_OK


# -- entry point --------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--node-budget", type=int)
    common.add_argument("--eval-budget", type=int)
    common.add_argument("--width-budget", type=int)
    common.add_argument("--workers", type=int)
    common.add_argument("--chain-sizes", type=_int_list, help="e.g. 2,3,4")

    parser = argparse.ArgumentParser(prog="clonekit", description="Median and majority clone constructions.")
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", parents=[common], help="build a term or plan")
    b.add_argument("construction", choices=BUILDERS)
    b.add_argument("--n", type=int)
    b.add_argument("--k", type=int)
    b.add_argument("--m", type=int, help="cascade width")
    b.add_argument("--which", choices=("lower", "upper"), default="lower")
    b.add_argument("--oracle-label", default=C.MAJORITY_LABEL)
    b.add_argument("-o", "--output")
    b.set_defaults(func=cmd_build)

    v = sub.add_parser("verify", parents=[common], help="exhaustively check a term file")
    v.add_argument("term", help="S-expression term file, or - for stdin")
    v.add_argument("--against", required=True, help="med:<k>, mnk:<n>:<k> or majority")
    v.add_argument("--arity", type=int, help="arity for the majority check (default: term arity)")
    v.add_argument("--seed", type=int, help="bind oracles to adversarial majority tables with this seed")
    v.add_argument("--seeds", type=int, help="run this many consecutive adversarial seeds")
    v.add_argument("--timing", action="store_true", help="include elapsed times in JSON")
    v.set_defaults(func=cmd_verify)

    bd = sub.add_parser("bound", parents=[common], help="exact cascade bound sequences")
    bd.add_argument("--n", type=int, required=True)
    bd.add_argument("--max-steps", type=int, default=C.DEFAULT_MAX_STEPS)
    bd.set_defaults(func=cmd_bound)

    c = sub.add_parser("classify", parents=[common], help="minimality of m^n_k")
    c.add_argument("--n", type=int)
    c.add_argument("--k", type=int)
    c.add_argument("--table", type=int, metavar="N_MAX")
    c.set_defaults(func=cmd_classify)

    cs = sub.add_parser("cascade-sim", parents=[common], help="simulate the med_3 cascade")
    cs.add_argument("--n", type=int)
    cs.add_argument("--steps", type=int, default=1)
    cs.add_argument("--start", default="distinct", help="distinct, constant, or comma-separated values")
    cs.set_defaults(func=cmd_cascade_sim)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        cfg = Config.from_args(args)
        return args.func(args, cfg)
    except (ClonekitError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
