import pytest

ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def record():
    def _record(k: int, ok: bool, detail: str):
        ACCEPTANCE_LINES[k] = f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}"
        return ok
    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
