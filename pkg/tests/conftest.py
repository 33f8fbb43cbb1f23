import pytest

ACCEPTANCE = {}


def record(criterion: int, passed: bool, detail: str = ""):
    ACCEPTANCE[criterion] = (passed, detail)
    line = f"criterion {criterion:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
    print(line)
    return line


@pytest.fixture
def acceptance():
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
