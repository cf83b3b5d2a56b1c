import pytest

# acceptance tests record one line each here; printed after the run
ACCEPTANCE_LINES = {}


@pytest.fixture()
def record():
    def _record(criterion: int, passed: bool, detail: str) -> None:
        ACCEPTANCE_LINES[criterion] = f"criterion {criterion:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
        print(ACCEPTANCE_LINES[criterion])
    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
