import pytest

from sarascc.scattering import RadarGrid

_VERDICTS = pytest.StashKey[dict]()


@pytest.fixture(scope="session")
def small_grid():
    return RadarGrid.default(M=8, N=8)


@pytest.fixture(scope="session")
def grid64():
    return RadarGrid.default()


def pytest_configure(config):
    config.stash[_VERDICTS] = {}


@pytest.fixture
def verdict(request):
    """Record one pass/fail line for an acceptance criterion, then assert it."""

    def record(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        request.config.stash[_VERDICTS][number] = line
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_VERDICTS, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for number in sorted(lines):
            terminalreporter.write_line(lines[number])
