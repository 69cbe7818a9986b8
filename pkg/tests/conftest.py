import pytest

# Lines recorded by tests/test_acceptance.py, echoed after the run so they
# appear even when pytest captures output.
ACCEPTANCE_LINES = []


def record(criterion: int, passed: bool, detail: str):
    line = f"{'PASS' if passed else 'FAIL'} criterion {criterion:>2}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


@pytest.fixture
def acceptance():
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
