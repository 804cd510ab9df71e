import math

import numpy as np
import pytest

from src.core.circuits import coupler_netlist
from src.core.errors import ConfigurationError, DomainError, ReductionRequiredError
from src.core.lagrangian import (
    CosineTerm,
    VariableBasis,
    build_energy_model,
    legendre_transform,
    trig_expand_coupling,
)
from src.core.netlist import parse
from src.core.units import CHARGE_ENERGY, FLUX_ENERGY

from conftest import FLUXONIUM_LIKE

MASSLESS_NODE = """
cap C 10fF a g
jj J 5GHz a g
ind L1 2nH a d
ind L2 3nH d g
ground g
"""


def test_transmon_model(transmon_graph):
    model = build_energy_model(transmon_graph)
    assert model.variables == ("phi_q",)
    np.testing.assert_allclose(model.cmat, [[80.0]])
    assert model.hessian([0.0])[0, 0] == pytest.approx(15.0)
    assert model.potential([math.pi]) == pytest.approx(15.0)
    form = legendre_transform(model)
    assert form.charging_energies[0] == pytest.approx(CHARGE_ENERGY / 80.0)


def test_coupler_kinetic_matrix_is_diagonal(k1):
    model = build_energy_model(parse(coupler_netlist(k1)))
    assert model.variables == ("phi_q", "phi_r")
    np.testing.assert_allclose(model.cmat, np.diag([k1.Cq + k1.C / 2.0, k1.C / 2.0]), atol=1e-12)
    assert legendre_transform(model).is_decoupled()


def test_derivatives_match_finite_differences():
    model = build_energy_model(parse(FLUXONIUM_LIKE))
    flux = {"phi": 0.3}
    theta = np.array([0.4])
    h = 1e-5
    up, down = model.potential(theta + h, flux), model.potential(theta - h, flux)
    assert model.gradient(theta, flux)[0] == pytest.approx((up - down) / (2 * h), rel=1e-6)
    g_up, g_down = model.gradient(theta + h, flux)[0], model.gradient(theta - h, flux)[0]
    assert model.hessian(theta, flux)[0, 0] == pytest.approx((g_up - g_down) / (2 * h), rel=1e-6)


def test_flux_shifts_the_inductive_branch():
    model = build_energy_model(parse(FLUXONIUM_LIKE))
    # at theta = 0 only the flux-displaced inductor stores energy
    energy = model.potential([0.0], {"phi": 0.5}) - model.potential([0.0], {})
    assert energy == pytest.approx(0.5 * FLUX_ENERGY / 300.0 * math.pi ** 2, rel=1e-9)


def test_unknown_flux_symbol():
    model = build_energy_model(parse(FLUXONIUM_LIKE))
    with pytest.raises(ConfigurationError) as info:
        model.potential([0.0], {"nope": 0.1})
    assert "nope" in str(info.value)


def test_basis_must_not_depend_on_common_phase():
    with pytest.raises(DomainError):
        VariableBasis(("x",), np.array([[1.0, 0.0]]), ("a", "g"))


def test_singular_capacitance_needs_reduction():
    model = build_energy_model(parse(MASSLESS_NODE))
    with pytest.raises(ReductionRequiredError):
        legendre_transform(model)


def test_describe_lists_every_term(k1):
    described = build_energy_model(parse(coupler_netlist(k1))).describe()
    names = {t["name"] for t in described["terms"]}
    assert names == {"Jq", "J1", "J2", "L1", "L2"}
    assert described["flux_symbols"] == ["phi_x", "phi_Xb"]


@pytest.mark.parametrize("phi_x", [0.0, 0.7, math.pi / 2, 2.5])
def test_trig_expansion_reproduces_coupling_cosines(k1, phi_x):
    model = build_energy_model(parse(coupler_netlist(k1)))
    te = trig_expand_coupling(model, "phi_q", "phi_r")
    assert te.e_sigma == pytest.approx(k1.ej_sigma)
    assert te.e_delta == pytest.approx(k1.ej_delta)
    phases = model.phases({"phi_x": phi_x / (2.0 * math.pi)})
    q, r = 0.3, -0.2
    theta = np.array([q, r])
    direct = sum(t.tensors(theta, phases, 0)[0] for t in model.terms
                 if isinstance(t, CosineTerm) and t.name in ("J1", "J2"))
    assert te.evaluate(q, r, phi_x) == pytest.approx(direct, rel=1e-12)
