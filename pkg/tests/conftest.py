import pytest
from hypothesis import settings

from postprice.mechanisms import MarketParams, build_mc_lin

settings.register_profile("default", deadline=None, max_examples=50)
settings.load_profile("default")


@pytest.fixture(scope="session")
def ref_params():
    return MarketParams(10, 12, 2.8)


@pytest.fixture(scope="session")
def ref_mc_lin(ref_params):
    return build_mc_lin(ref_params)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
