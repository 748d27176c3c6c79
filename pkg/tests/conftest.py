"""Collects acceptance results and prints one line per criterion after the run."""

import pytest

_RESULTS: dict = {}

CRITERIA = {
    1: "kernel-oracle agreement",
    2: "incremental identity",
    3: "uniform local bounds",
    4: "hole geometry inequalities",
    5: "poisson reduction",
    6: "poisson sandwich",
    7: "percolation trend",
    8: "discretization consistency",
    9: "multi-type dominance",
    10: "determinism",
}


@pytest.fixture
def report():
    def _report(criterion: int, part: str, passed: bool, detail: str) -> None:
        _RESULTS.setdefault(criterion, []).append((part, bool(passed), detail))
    return _report


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for k, name in CRITERIA.items():
        parts = _RESULTS.get(k)
        if not parts:
            tr.write_line(f"criterion {k:2d} NOT RUN  {name}")
            continue
        ok = all(p[1] for p in parts)
        detail = "; ".join(f"[{p[0]}] {'pass' if p[1] else 'FAIL'}: {p[2]}" if p[0] else p[2] for p in parts)
        tr.write_line(f"criterion {k:2d} {'PASS' if ok else 'FAIL'}     {name}: {detail}")
