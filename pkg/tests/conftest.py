import pytest

from polybasin.poly import Polynomial

CRITERIA: dict = {}


def record(key, ok, detail=""):
    """Store a pass/fail line for the acceptance summary; later records for a key append."""
    prev = CRITERIA.get(key)
    if prev is not None:
        ok = ok and prev[0]
        detail = f"{prev[1]}; {detail}" if detail else prev[1]
    CRITERIA[key] = (bool(ok), detail)


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(CRITERIA):
        ok, detail = CRITERIA[key]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {key}: {detail}")


def poly(*coeffs):
    return Polynomial(list(coeffs))


@pytest.fixture
def basilica():
    return poly(-1, 0, 1)


@pytest.fixture
def cubic():
    return poly(0.1, 0, 0, 1)
