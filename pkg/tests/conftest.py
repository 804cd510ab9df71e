# tests/conftest.py
import pytest

from src.core.circuits import coupler_netlist
from src.core.lagrangian import build_energy_model
from src.core.netlist import parse
from src.core.reduce import eliminate_massless_or_potential_free
from src.core.settings import reset_settings
from src.examples.coupler import CASES

TRANSMON = """
# grounded transmon
node q
cap Cs 80fF q g
jj J 15GHz q g
ground g
"""

FLUXONIUM_LIKE = """
cap C 10fF a g
jj J 8GHz a g
ind L 300nH a g
loop phi J:+ L:-
ground g
"""


@pytest.fixture(autouse=True)
def _fresh_settings():
    reset_settings()
    yield
    reset_settings()


@pytest.fixture
def k1():
    return CASES["k1"].params


@pytest.fixture
def kn():
    return CASES["kn"].params


@pytest.fixture
def add():
    return CASES["add"].params


@pytest.fixture
def k1_model(k1):
    model, _ = eliminate_massless_or_potential_free(build_energy_model(parse(coupler_netlist(k1))))
    return model


@pytest.fixture
def transmon_graph():
    return parse(TRANSMON)
