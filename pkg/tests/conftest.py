import numpy as np
import pytest

from nematic_el.coefficients import LeslieCoefficients
from nematic_el.spectral import Grid

# Case 1 set: lambda1 = -1, lambda2 = 0.1, mu2 + mu3 = mu6 - mu5 = -0.1
CASE1 = LeslieCoefficients(mu1=0.1, mu2=-0.55, mu3=0.45, mu5=0.3, mu6=0.2, case=1)
# Case 2 set without the Parodi relation: |lambda2 - mu2 - mu3| = 0.3 < 2 sqrt(0.5)
CASE2 = LeslieCoefficients(mu1=0.1, mu2=-0.6, mu3=0.4, mu5=0.3, mu6=0.2, case=2)
# lambda2 = 0 (co-rotational) Case 1 set
COROT = LeslieCoefficients(mu1=0.1, mu2=-0.5, mu3=0.5, mu5=0.25, mu6=0.25, case=1)


@pytest.fixture
def grid2():
    return Grid(2, 32)


@pytest.fixture
def grid8():
    return Grid(2, 8)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE_LINES = []


def record_acceptance(line):
    _ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
