import pytest

ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record one ``PASS``/``FAIL`` line per acceptance criterion."""

    def record(number, title, passed, detail):
        line = f"criterion {number:>2} {'PASS' if passed else 'FAIL'}  {title}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
