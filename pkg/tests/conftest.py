import pytest

_LINES = []


@pytest.fixture
def acceptance_lines():
    return _LINES


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: one of the sixteen acceptance criteria")


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_LINES, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
