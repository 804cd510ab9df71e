import math

import numpy as np
import pytest
from scipy.optimize import brentq

from src.core.circuits import coupler_netlist
from src.core.errors import DomainError, DoubleWellError
from src.core.lagrangian import build_energy_model
from src.core.netlist import parse
from src.core.reduce import eliminate_massless_or_potential_free
from src.core.spectrum import (
    CLOSED_FORM,
    NUMERIC,
    analyze_point,
    asymmetric_transverse,
    couplings_closed_form,
    design_limits,
    eta,
    find_minimum,
    normal_mode_frequencies,
    qubit_curvature_adapted,
    qubit_spectrum_closed_form,
    resonator_spectrum_closed_form,
    spectrum_numeric,
    transverse_zero_crossing,
)
from src.core.units import CHARGE_ENERGY, FLUX_ENERGY
from src.examples.coupler import CASES


def _numeric(p, phi_x, phi_Xb=0.0):
    model, _ = eliminate_massless_or_potential_free(build_energy_model(parse(coupler_netlist(p))))
    flux = {"phi_x": phi_x / (2 * math.pi), "phi_Xb": phi_Xb / (2 * math.pi)}
    return analyze_point(model, flux, "phi_q", "phi_r")


def test_k1_closed_forms_at_zero_flux(k1):
    q = qubit_spectrum_closed_form(k1, 0.0)
    r = resonator_spectrum_closed_form(k1, 0.0)
    assert q.E_C == pytest.approx(2 * CHARGE_ENERGY / (2 * 70.0 + 114.0))
    assert q.frequency == pytest.approx(math.sqrt(8 * q.E_C * q.stiffness))
    assert q.frequency == pytest.approx(6.36, abs=0.01)
    assert r.frequency == pytest.approx(7.93, abs=0.01)
    assert q.alpha < 0
    assert q.Delta == pytest.approx(q.frequency + q.alpha)


def test_k1_closed_form_couplings(k1):
    at_zero = couplings_closed_form(k1, 0.0).as_mhz()
    assert at_zero["g_xx"] == pytest.approx(51.3, abs=0.1)
    assert at_zero["g_zz"] == pytest.approx(-5.13, abs=0.02)
    assert at_zero["g_zx"] == pytest.approx(0.0, abs=1e-9)
    at_half = couplings_closed_form(k1, math.pi / 2).as_mhz()
    assert at_half["g_zx"] == pytest.approx(-57.2, abs=0.1)
    assert at_half["g_xx"] == pytest.approx(0.0, abs=1e-9)


def test_eta_and_its_range(k1):
    assert eta(k1.ej_sigma, k1.k, k1.L, 0.0) == pytest.approx(20 * 4.5 / (2 * FLUX_ENERGY))
    assert eta(k1.ej_sigma, k1.k, k1.L, math.pi) == pytest.approx(-eta(k1.ej_sigma, k1.k, k1.L, 0.0))
    with pytest.raises(DomainError):
        resonator_spectrum_closed_form(k1.with_overrides({"L": 20.0}), 0.0)


def test_flux_bias_flips_the_qubit_anharmonicity(k1):
    biased = qubit_spectrum_closed_form(k1, 0.0, math.pi)
    assert biased.alpha > 0
    assert biased.frequency < qubit_spectrum_closed_form(k1, 0.0).frequency
    with pytest.raises(DoubleWellError):
        qubit_spectrum_closed_form(k1.with_overrides({"ej_q": 40.0}), 0.0, math.pi)
    with pytest.raises(DomainError):
        qubit_spectrum_closed_form(k1, 0.0, 1.0)


@pytest.mark.parametrize("case", ["k1", "kn"])
@pytest.mark.parametrize("multiple", [0, 1])
def test_numeric_pipeline_matches_closed_forms_at_anchors(case, multiple):
    p = CASES[case].params
    phi_x = multiple * p.k * math.pi
    point = _numeric(p, phi_x)
    q, r = point.modes["phi_q"], point.modes["phi_r"]
    q0, r0 = qubit_spectrum_closed_form(p, phi_x), resonator_spectrum_closed_form(p, phi_x)
    assert q.frequency == pytest.approx(q0.frequency, rel=1e-9)
    assert r.frequency == pytest.approx(r0.frequency, rel=1e-9)
    assert q.alpha == pytest.approx(q0.alpha, rel=1e-9)
    assert r.alpha == pytest.approx(r0.alpha, rel=1e-9)
    closed = couplings_closed_form(p, phi_x)
    assert point.couplings.method == NUMERIC and closed.method == CLOSED_FORM
    assert point.couplings.g_xx == pytest.approx(closed.g_xx, rel=1e-9)
    assert point.couplings.g_zz == pytest.approx(closed.g_zz, rel=1e-9)
    assert point.couplings.g_zx == pytest.approx(0.0, abs=1e-12)


def test_numeric_minimum_moves_with_flux(k1):
    point = _numeric(k1, math.pi / 2)
    assert point.op.well_ok
    assert point.op.gradient_norm < 1e-10
    assert np.abs(point.op.phi_min).max() > 1e-3
    assert point.couplings.g_zx < 0


def test_find_minimum_warm_start_lands_on_the_same_point(k1_model):
    flux = {"phi_x": 0.25, "phi_Xb": 0.0}
    cold = find_minimum(k1_model, flux)
    warm = find_minimum(k1_model, flux, start=cold.phi_min + 0.05)
    np.testing.assert_allclose(warm.phi_min, cold.phi_min, atol=1e-8)
    assert warm.iterations <= cold.iterations + 5
    _, grad, _ = k1_model.derivatives(cold.phi_min, flux, order=2)
    assert np.linalg.norm(grad) < 1e-10


def test_spectrum_numeric_on_a_transmon(transmon_graph):
    model, _ = eliminate_massless_or_potential_free(build_energy_model(transmon_graph))
    op = find_minimum(model)
    modes, couplings = spectrum_numeric(model, op)
    (mode,) = modes.values()
    assert mode.E_C == pytest.approx(CHARGE_ENERGY / 80.0)
    assert mode.stiffness == pytest.approx(15.0)
    assert mode.frequency == pytest.approx(math.sqrt(8 * 15.0 * CHARGE_ENERGY / 80.0))
    # quartic correction of a cosine well is -E_C
    assert mode.alpha == pytest.approx(-mode.E_C)
    assert mode.Delta == pytest.approx(mode.frequency + mode.alpha)
    assert couplings.as_dict()["g_xx"] == 0.0


def test_normal_modes_equal_bare_modes_without_junction_asymmetry(k1):
    p = k1.with_overrides({"d": 0.0})
    model, _ = eliminate_massless_or_potential_free(build_energy_model(parse(coupler_netlist(p))))
    point = analyze_point(model, {"phi_x": 0.0, "phi_Xb": 0.0}, "phi_q", "phi_r")
    modes = normal_mode_frequencies(model, point.op)
    bare = sorted(m.frequency for m in point.modes.values())
    np.testing.assert_allclose(modes, bare, rtol=1e-9)


def test_design_limits_k1(k1):
    limits = design_limits(k1)
    assert limits.L_crit == pytest.approx(FLUX_ENERGY / (2 * (10.0 + 20.0 / 4.0)))
    assert limits.L_crit == pytest.approx(5.45, abs=0.01)
    # at L_max the tuning range spans exactly the 6-8 GHz band, whatever C is
    assert limits.L_max == pytest.approx(0.28 * 2 * FLUX_ENERGY / 20.0)
    assert limits.L_max == pytest.approx(4.577, abs=0.001)
    at_limit = k1.with_overrides({"L": limits.L_max})
    top = resonator_spectrum_closed_form(at_limit, 0.0).frequency
    floor = resonator_spectrum_closed_form(at_limit, math.pi).frequency
    assert top / floor == pytest.approx(8.0 / 6.0, rel=1e-9)
    wider = design_limits(k1.with_overrides({"C": 60.0}))
    assert wider.L_max == pytest.approx(limits.L_max)
    assert limits.k_crit is None


def test_design_limits_added_inductance(add):
    limits = design_limits(add)
    assert 3.0 < limits.k_crit < 3.5
    assert qubit_curvature_adapted(add, limits.k_crit) == pytest.approx(0.0, abs=1e-6)


def _adapted_resonator_alpha_rel(p, phi_x):
    """Quartic-order resonator anharmonicity of the added-inductance circuit, by hand."""
    E_a, E_L = FLUX_ENERGY / p.La, FLUX_ENERGY / p.L
    c = math.cos(phi_x / p.k)
    stiffness, quartic = 0.0, 0.0
    for ej in (p.ej_sigma * (1 + p.d) / 2, p.ej_sigma * (1 - p.d) / 2):
        K_d = E_L + c * ej / p.k
        share = E_a / (E_a + K_d)
        # each branch sees phi_r / 2
        stiffness += E_a * (1 - share) / 4
        quartic += -c * ej * share ** 4 / p.k ** 3 / 16
    E_C = 2 * CHARGE_ENERGY / p.C
    freq = math.sqrt(8 * E_C * stiffness)
    alpha = 0.5 * quartic * 2 * E_C / stiffness
    return alpha / (freq + alpha)


@pytest.mark.parametrize("turns, percent", [(0.0, 0.0030), (1.0, 0.0280)])
def test_added_inductance_resonator_anharmonicity(add, turns, percent):
    phi_x = turns * add.k * math.pi
    point = _numeric(add, phi_x)
    alpha_rel = point.modes["phi_r"].alpha_rel
    assert alpha_rel == pytest.approx(_adapted_resonator_alpha_rel(add, phi_x), rel=1e-6)
    assert abs(alpha_rel) * 100 == pytest.approx(percent, abs=0.0003)


def test_transverse_zero_crossing(k1):
    assert transverse_zero_crossing(k1.ej_sigma, 1, 4.5, 4.5, 0.0) is None
    a = transverse_zero_crossing(k1.ej_sigma, 1, 4.5 * 0.99, 4.5 * 1.01, 0.08)
    b = transverse_zero_crossing(k1.ej_sigma, 1, 4.5 * 0.98, 4.5 * 1.02, 0.16)
    assert a == pytest.approx(b)
    c = transverse_zero_crossing(k1.ej_sigma, 1, 4.5 * 0.97, 4.5 * 1.03, 0.24)
    assert c == pytest.approx(a)
    total, crossing = asymmetric_transverse(k1, 0.01, 0.08, a)
    assert crossing == pytest.approx(a)
    reference = couplings_closed_form(k1, 0.0).g_xx
    assert abs(total) < 1e-3 * abs(reference)


def test_transverse_zero_crossing_of_the_full_potential(k1):
    p = k1.with_overrides({"delta_L": 0.01})
    model, _ = eliminate_massless_or_potential_free(build_energy_model(parse(coupler_netlist(p))))

    def g_xx(phi_x):
        flux = {"phi_x": phi_x / (2 * math.pi), "phi_Xb": 0.0}
        return analyze_point(model, flux, "phi_q", "phi_r").couplings.g_xx

    assert abs(g_xx(math.pi / 2)) == pytest.approx(0.02318, abs=2e-4)
    root = brentq(g_xx, math.pi / 2, math.pi, xtol=1e-10)
    assert root == pytest.approx(2.404, abs=0.01)
    # the first-order estimate lands well short of the root of the full potential
    estimate = transverse_zero_crossing(p.ej_sigma, p.k, p.L1, p.L2, p.d)
    assert estimate == pytest.approx(2.042, abs=0.002)
    assert root - estimate == pytest.approx(0.36, abs=0.02)
