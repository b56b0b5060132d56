import pytest

from wavetrace.groupfile import load_group
from wavetrace.schottky import enumerate_primitives


@pytest.fixture(scope="session")
def thin():
    return load_group("pants_thin")


@pytest.fixture(scope="session")
def wide():
    return load_group("pants_wide")


@pytest.fixture(scope="session")
def thin_spec(thin):
    return enumerate_primitives(thin, 20.0)


@pytest.fixture(scope="session")
def wide_spec(wide):
    return enumerate_primitives(wide, 12.0)


@pytest.fixture(scope="session")
def thin_long(thin):
    return enumerate_primitives(thin, 34.0)


_LINES = []


@pytest.fixture(scope="session")
def criterion_log():
    """Collects one PASS/FAIL line per acceptance criterion for the terminal summary."""
    def log(line):
        print(line)
        _LINES.append(line)
    return log


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
