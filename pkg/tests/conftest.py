import pytest

ACCEPTANCE_LINES = []


@pytest.fixture
def record():
    """Log one acceptance line and fail the test if the criterion failed."""

    def _record(number, title, ok, detail):
        line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
