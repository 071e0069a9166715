import numpy as np
import pytest

from cryocim.array import ArrayState
from cryocim.device import QaheParams, SelectorModel, default_selector

# h/e^2 times the nominal read current, evaluated by hand:
# 25812.807 * 2.02e-9 = 5.214187014e-5 V
CELL_VXY = 5.214187014e-5


@pytest.fixture
def params():
    return QaheParams()


@pytest.fixture
def selector():
    return default_selector()


def linear_table(r1, v_max=1.0, n=21, interpolation="linear"):
    v = np.linspace(-v_max, v_max, n)
    return SelectorModel(v, v / r1, "linear-test", interpolation)


@pytest.fixture
def blank4():
    return ArrayState.blank(4, 4)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)
