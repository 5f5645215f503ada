from __future__ import annotations

import pytest

from hybridtrace import ledger as ledger_mod
from hybridtrace.qfield import FieldSpec

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def acceptance():
    """Records one pass/fail line per acceptance criterion."""

    def record(n: int, ok: bool, detail: str) -> None:
        ACCEPTANCE[n] = (ok, detail)
        print(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def q2():
    return FieldSpec(2)


@pytest.fixture(scope="session")
def q5():
    return FieldSpec(5)


@pytest.fixture(scope="session")
def ledger2_60(q2):
    return ledger_mod.build(q2, 60)


@pytest.fixture(scope="session")
def ledger5_60(q5):
    return ledger_mod.build(q5, 60)


@pytest.fixture(scope="session")
def ledger2_400(q2):
    return ledger_mod.build(q2, 400)
