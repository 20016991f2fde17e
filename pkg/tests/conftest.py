from __future__ import annotations

import time
from dataclasses import dataclass
from functools import lru_cache

import pytest

from fermat_periods.hodge import PeriodVectors, period_vectors
from fermat_periods.numerics import PrecisionContext
from fermat_periods.pf_transport import JetPoint, fermat_jets

ACCEPTANCE: dict[int, list[tuple[str, bool]]] = {}


@dataclass(frozen=True)
class PeriodData:
    n: int
    ctx: PrecisionContext
    jets: JetPoint
    periods: PeriodVectors
    seconds: float


@lru_cache(maxsize=None)
def period_data(n: int) -> PeriodData:
    """Jets and period vectors at the default precision, computed once per session."""
    ctx = PrecisionContext.for_n(n)
    start = time.perf_counter()
    jp = fermat_jets(n, ctx, depth=n + 5)
    pv = period_vectors(n, jp, ctx)
    return PeriodData(n, ctx, jp, pv, time.perf_counter() - start)


@pytest.fixture(scope="session")
def periods():
    return period_data


def record(criterion: int, label: str, passed: bool) -> None:
    ACCEPTANCE.setdefault(criterion, []).append((label, bool(passed)))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance")
    for k in range(1, 11):
        parts = ACCEPTANCE.get(k)
        if not parts:
            terminalreporter.write_line(f"criterion {k}: NOT RUN")
            continue
        ok = all(p for _, p in parts)
        failed = [label for label, p in parts if not p]
        labels = ", ".join(label for label, _ in parts) if ok else "failed: " + ", ".join(failed)
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'} ({labels})")
