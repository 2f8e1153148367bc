import pytest

# lines appended by test_acceptance; echoed after the run so they show up without -s
ACCEPTANCE_LINES = []


@pytest.fixture
def report_line():
    def emit(line):
        ACCEPTANCE_LINES.append(line)
        print(line)
    return emit


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
