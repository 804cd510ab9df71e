import numpy as np
import pytest

from src.core.circuits import coupler_netlist
from src.core.errors import StructureError
from src.core.lagrangian import AdaptedBranchTerm, build_energy_model
from src.core.netlist import parse
from src.core.reduce import eliminate_massless_or_potential_free, eliminate_quadratic, series_parallel_simplify
from src.core.units import FLUX_ENERGY

from test_lagrangian import MASSLESS_NODE

CAPACITIVE_DIVIDER = """
cap C1 10fF a g
jj J 5GHz a g
cap C2 20fF a b
cap C3 30fF b g
ground g
"""

FLOATING_PORT = """
cap C 10fF a g
jj J 5GHz a g
imp Z1 R=50 Cz=100fF a b
imp Z2 R=50 Cz=100fF b g
ground g
"""


def test_massless_series_inductors():
    model, report = eliminate_massless_or_potential_free(build_energy_model(parse(MASSLESS_NODE)))
    assert model.variables == ("phi_a",)
    assert report.eliminated == ("phi_d",)
    assert report.kept_unchanged == ("phi_a",)
    assert report.steps[0]["method"] == "massless_quadratic"
    assert model.hessian([0.0])[0, 0] == pytest.approx(5.0 + FLUX_ENERGY / 5.0, rel=1e-12)


def test_potential_free_node_folds_into_series_capacitance():
    model, report = eliminate_massless_or_potential_free(build_energy_model(parse(CAPACITIVE_DIVIDER)))
    assert model.variables == ("phi_a",)
    assert report.steps[0]["method"] == "potential_free"
    np.testing.assert_allclose(model.cmat, [[10.0 + 20.0 * 30.0 / 50.0]], rtol=1e-12)


def test_coupler_without_added_inductance_is_untouched(k1):
    model, report = eliminate_massless_or_potential_free(build_energy_model(parse(coupler_netlist(k1))))
    assert report.is_identity
    assert model.variables == ("phi_q", "phi_r")
    np.testing.assert_allclose(report.transform, np.eye(2))


def test_added_inductance_folds_into_adapted_branches(add):
    model, report = eliminate_massless_or_potential_free(build_energy_model(parse(coupler_netlist(add))))
    assert model.variables == ("phi_q", "phi_r")
    assert set(report.kept_unchanged) == {"phi_q", "phi_r"}
    assert len(report.folded) == 2
    assert sum(isinstance(t, AdaptedBranchTerm) for t in model.terms) == 2
    doc = report.to_dict()
    assert doc["eliminated"] == list(report.eliminated)
    assert all(step["method"] == "adapted_branch" for step in doc["steps"])


def test_variable_in_neither_energy():
    with pytest.raises(StructureError):
        eliminate_massless_or_potential_free(build_energy_model(parse(FLOATING_PORT)))


def test_eliminate_quadratic_schur_complement():
    M = np.array([[3.0, -1.0, 0.0], [-1.0, 4.0, -2.0], [0.0, -2.0, 5.0]])
    kept, R = eliminate_quadratic(M, ["x", "y", "z"], ["z"])
    expected = M[:2, :2] - np.outer(M[:2, 2], M[2, :2]) / M[2, 2]
    np.testing.assert_allclose(kept, expected, atol=1e-12)
    assert R.shape == (3, 3)


def test_eliminate_quadratic_rejects_indefinite_block():
    with pytest.raises(StructureError):
        eliminate_quadratic(np.diag([1.0, -1.0]), ["x", "y"], ["y"])


def test_series_parallel_simplify():
    g = series_parallel_simplify(parse(MASSLESS_NODE + "ind L3 20nH a g\n"))
    inductors = [b for b in g.branches if b.kind == "inductor"]
    assert len(inductors) == 1
    assert inductors[0].value == pytest.approx(1.0 / (1.0 / 5.0 + 1.0 / 20.0))
    assert "d" not in g.nodes
