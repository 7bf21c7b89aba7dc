import pytest

from explicit_mobius.explicit import Workspace
from explicit_mobius.sieve import mobius_sieve


@pytest.fixture(scope="session")
def table():
    return mobius_sieve(1_000_000)


@pytest.fixture(scope="session")
def ws():
    """One in-memory workspace so zero scans are shared across test modules."""
    return Workspace()


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
