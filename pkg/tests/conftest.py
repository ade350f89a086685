import pytest

from qlin.forms import AuxForms
from qlin.qseries import validate_config, validate_instance

TSCHAKALOFF = {"P": [["0"], ["1"]], "Q": ["1"], "q": "2", "place": "infinity"}
Y_OVER_X = {"P": [["0"], ["1"]], "Q": ["0", "1"], "q": "2", "place": "infinity"}
Y2_MINUS_XY = {"P": [["0"], ["0", "-1"], ["1"]], "Q": ["1"], "q": "2", "place": "infinity"}
TSCHAKALOFF_2ADIC = {"P": [["0"], ["1"]], "Q": ["1"], "q": "1/2", "place": "p:2"}
XY_PLUS_1 = {"P": [["1"], ["0", "1"]], "Q": ["1"], "q": "2", "place": "infinity"}

SINGLE = {"m": 1, "d0": 1, "alphas": ["1"], "s": [[1]]}
D0_2 = {"m": 1, "d0": 2, "alphas": ["1"], "s": [[1, 1]]}


def build(raw_inst, raw_cfg=SINGLE, pipeline=None):
    inst = validate_instance(raw_inst, pipeline)
    cfg = validate_config(inst, raw_cfg)
    return inst, cfg


@pytest.fixture(scope="session")
def tsch():
    return build(TSCHAKALOFF)


@pytest.fixture(scope="session")
def tsch_aux(tsch):
    return AuxForms(*tsch)


@pytest.fixture(scope="session")
def case_a():
    return build(Y_OVER_X)


@pytest.fixture(scope="session")
def case_a_aux(case_a):
    return AuxForms(*case_a)


@pytest.fixture(scope="session")
def case_b():
    return build(Y2_MINUS_XY, D0_2)


@pytest.fixture(scope="session")
def padic():
    return build(TSCHAKALOFF_2ADIC)


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])
