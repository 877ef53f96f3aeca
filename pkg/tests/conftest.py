import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from viscolab import (FourierSeries, burgers_flux, make_linear_flux,  # noqa: E402
                      make_separable_convex_flux)

COS_HALF = FourierSeries(((0, 1.0, 0.0), (1, 0.5, 0.0)))  # 1 + 0.5 cos(2 pi y)
SIN_QUARTER = FourierSeries(((1, 0.0, 0.25),))


@pytest.fixture(scope="session")
def burgers():
    return burgers_flux()


@pytest.fixture(scope="session")
def linear_cos():
    return make_linear_flux(COS_HALF)


@pytest.fixture(scope="session")
def separable():
    return make_separable_convex_flux(SIN_QUARTER, 1.0, 2.0, 1.0)


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
