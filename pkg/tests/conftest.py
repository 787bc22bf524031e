import itertools

import pytest

ACCEPTANCE_RESULTS = []


def brute_order_statistic(t, k):
    """k-th smallest by counting, no sorting: v with #{< v} < k <= #{<= v}."""
    for v in t:
        below = sum(1 for x in t if x < v)
        at_most = sum(1 for x in t if x <= v)
        if below < k <= at_most:
            return v
    raise AssertionError("unreachable")


def brute_majority(t):
    for v in set(t):
        if 2 * t.count(v) > len(t):
            return v
    return None


def tuples(n, d):
    return itertools.product(range(d), repeat=n)


@pytest.fixture
def criterion():
    def record(number, passed, detail=""):
        ACCEPTANCE_RESULTS.append((number, passed, detail))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    merged = {}
    for number, passed, detail in ACCEPTANCE_RESULTS:
        ok, details = merged.get(number, (True, []))
        merged[number] = (ok and passed, details + ([detail] if detail else []))
    for number in sorted(merged, key=lambda x: (int(str(x).rstrip("abcdef")), str(x))):
        ok, details = merged[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {' | '.join(details)}")
