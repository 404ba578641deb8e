from fractions import Fraction

import pytest

from teamocc.coordination import coordinated_system
from teamocc.enumeration import build_history_index, build_prescription_index
from teamocc.fixtures import load_fixture

F = Fraction


@pytest.fixture(scope="session")
def m_unit():
    return load_fixture("m_unit")


@pytest.fixture(scope="session")
def m_match():
    return load_fixture("m_match")


@pytest.fixture(scope="session")
def m_reveal():
    return load_fixture("m_reveal")


@pytest.fixture(scope="session")
def m_corr():
    return load_fixture("m_corr")


class Setup:
    def __init__(self, model, horizon, domain_mode="reachable"):
        self.model = model
        self.T = horizon
        self.index = build_history_index(model, horizon)
        self.pindex = build_prescription_index(model, horizon, self.index, domain_mode)
        self.system = coordinated_system(model, self.pindex)


_SETUPS = {}


def setup_for(name, horizon, domain_mode="reachable"):
    key = (name, horizon, domain_mode)
    if key not in _SETUPS:
        _SETUPS[key] = Setup(load_fixture(name), horizon, domain_mode)
    return _SETUPS[key]


@pytest.fixture
def setup():
    return setup_for


# acceptance criteria report: one line per criterion at the end of the run
ACCEPTANCE = {}


def record(number, title, passed, note=""):
    ACCEPTANCE[number] = (title, passed, note)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        title, passed, note = ACCEPTANCE[k]
        line = f"criterion {k:2d} {'PASS' if passed else 'FAIL'}  {title}"
        terminalreporter.write_line(line + (f"  ({note})" if note else ""))
