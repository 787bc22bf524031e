"""Executable median/majority constructions over finite chains, with brute-force checkers."""

from .core import (
    FunctionTable,
    is_majority_function,
    lattice_order_statistic,
    majority_value,
    median_odd,
    order_statistic,
)
from .term import (
    Symbol,
    Term,
    app,
    evaluate,
    evaluate_all_boolean,
    make_application,
    make_variable,
    med,
    mnk,
    oracle,
    substitute,
    term_stats,
    var,
)
from .sexpr import parse_sexpr, to_sexpr

__version__ = "0.1.0"

__all__ = [
    "FunctionTable",
    "is_majority_function",
    "lattice_order_statistic",
    "majority_value",
    "median_odd",
    "order_statistic",
    "Symbol",
    "Term",
    "app",
    "evaluate",
    "evaluate_all_boolean",
    "make_application",
    "make_variable",
    "med",
    "mnk",
    "oracle",
    "substitute",
    "term_stats",
    "var",
    "parse_sexpr",
    "to_sexpr",
]
