import numpy as np
import pytest

from edss_markov.sim import OMITTED_YEAR_STATIONARY, reversible_chain


@pytest.fixture
def calibrated():
    """Birth-death chain whose stationary distribution is the omitted-year target."""
    return reversible_chain(OMITTED_YEAR_STATIONARY, 0.2)


@pytest.fixture
def rng():
    return np.random.default_rng(20261014)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)
