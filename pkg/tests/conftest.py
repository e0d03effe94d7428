import pytest

# criterion number -> list of (passed, detail) recorded by tests/test_acceptance.py
ACCEPTANCE: dict[int, list] = {}


@pytest.fixture
def record():
    """``record(criterion, passed, detail)``; call before asserting so that a
    failing check still produces its summary line."""
    def _record(criterion: int, passed: bool, detail: str):
        ACCEPTANCE.setdefault(criterion, []).append((bool(passed), detail))
        return passed
    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for c in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[c]
        ok = all(p for p, _ in parts)
        tr.write_line(f"criterion {c:2d}: {'PASS' if ok else 'FAIL'}  "
                      + "; ".join(d for _, d in parts))
