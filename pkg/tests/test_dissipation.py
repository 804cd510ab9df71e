import math

import numpy as np
import pytest

from src.core.dissipation import (
    BathSpec,
    boost_ratio,
    charge_matrix_element_squared,
    coupling_vector_mQ,
    decoherence_times,
    integrate_cavity,
    integrate_modulated_lab_frame,
    kappa_from_bath,
    langevin_displacement_modulated,
    langevin_displacement_static,
    modulated_steady_state,
    ohmic_slope,
    qubit_decoherence,
    readout_summary,
    readout_trace,
    resonator_decoherence,
    resonator_mode_with_bath,
    spectral_density,
    static_steady_state,
    t1_closed_form,
)
from src.core.errors import DomainError
from src.core.models import ModeSpectrum
from src.core.spectrum import qubit_spectrum_closed_form, resonator_spectrum_closed_form
from src.core.units import hbar

BATH = BathSpec(R=50.0, C_Z=1e4, T=0.02)


def test_bath_validation():
    with pytest.raises(DomainError):
        BathSpec(R=-1.0, C_Z=1e4)
    with pytest.raises(DomainError):
        BathSpec(R=50.0, C_Z=1e4, T=0.0)
    assert BathSpec(R=50.0, C_Z=1e4).temperature == pytest.approx(0.020)


def test_spectral_density_is_ohmic_at_low_frequency():
    slope = ohmic_slope(114.0, 5.0, BATH)
    assert slope > 0
    assert spectral_density(114.0, 5.0, BATH, 1e3) / 1e3 == pytest.approx(slope, rel=1e-9)
    grid = spectral_density(114.0, 5.0, BATH, np.array([1e9, 1e10, 4e10]))
    assert grid.shape == (3,)
    assert np.all(grid > 0)
    with pytest.raises(DomainError):
        spectral_density(114.0, 5.0, BATH, 0.0)


def test_charge_coupling_factors():
    sym = coupling_vector_mQ(114.0, 5.0)
    assert sym.symmetric and sym.qubit == 0.0 and sym.report is None
    assert sym.resonator == pytest.approx(2 * 5.0 / 119.0)
    asym = coupling_vector_mQ(114.0, 5.0, 4.0)
    assert not asym.symmetric
    assert asym.qubit == pytest.approx(5.0 / 119.0 - 4.0 / 118.0)
    assert "asymmetric" in asym.report
    with pytest.raises(DomainError):
        coupling_vector_mQ(114.0, -1.0)


def test_charge_matrix_element():
    assert charge_matrix_element_squared(50.0) == pytest.approx(hbar / 100.0)
    with pytest.raises(DomainError):
        charge_matrix_element_squared(0.0)


def test_bath_mode_without_coupling_is_the_bare_resonator(k1):
    mode = resonator_mode_with_bath(k1, 0.4, Cg=0.0)
    assert mode.frequency == pytest.approx(resonator_spectrum_closed_form(k1, 0.4).frequency, rel=1e-8)
    assert resonator_mode_with_bath(k1, 0.4, Cg=5.0).frequency < mode.frequency


@pytest.mark.parametrize("phi_x", [0.0, 1.0, math.pi])
@pytest.mark.parametrize("Cg", [1.0, 5.0, 20.0])
def test_composed_t1_equals_closed_form(k1, phi_x, Cg):
    times = resonator_decoherence(k1, phi_x, BATH, Cg)
    assert times.T1 == pytest.approx(t1_closed_form(k1, phi_x, BATH, Cg), rel=1e-9)
    assert math.isinf(times.Tphi)
    assert times.T2 == pytest.approx(2 * times.T1)


def test_decoupled_resonator_does_not_decay(k1):
    assert math.isinf(t1_closed_form(k1, 0.0, BATH, 0.0))
    assert math.isinf(resonator_decoherence(k1, 0.0, BATH, 0.0).T1)
    assert kappa_from_bath(k1, 0.0, BATH, 0.0) == 0.0


def test_stronger_coupling_and_warmer_bath_shorten_t1(k1):
    t_weak = resonator_decoherence(k1, 0.0, BATH, 2.0).T1
    t_strong = resonator_decoherence(k1, 0.0, BATH, 8.0).T1
    warm = BathSpec(R=50.0, C_Z=1e4, T=0.3)
    assert t_strong < t_weak
    assert resonator_decoherence(k1, 0.0, warm, 2.0).T1 < t_weak
    assert kappa_from_bath(k1, 0.0, BATH, 8.0) > kappa_from_bath(k1, 0.0, BATH, 2.0) > 0


def test_symmetric_qubit_is_protected(k1):
    p = k1.with_overrides({"Cg": 5.0})
    qubit = qubit_spectrum_closed_form(p, 0.0)
    times = qubit_decoherence(p, qubit, BATH)
    assert math.isinf(times.T1) and math.isinf(times.T2)
    assert math.isfinite(qubit_decoherence(p, qubit, BATH, Cg_b=4.0).T1)


def test_pure_dephasing_enters_t2():
    mode = ModeSpectrum(name="q", frequency=5.0, Z0=300.0, phi_zpf=0.3, alpha=-0.2, alpha_rel=-0.04)
    times = decoherence_times(mode, 0.1, 1e6, T=0.02, diagonal_difference=1e-19, slope=1e-4)
    assert math.isfinite(times.Tphi)
    assert 1 / times.T2 == pytest.approx(1 / (2 * times.T1) + 1 / times.Tphi)
    with pytest.raises(DomainError):
        decoherence_times(mode, 0.1, 1e6, T=-1.0)


# -----------------------------------------------------------------------------
# Readout
# -----------------------------------------------------------------------------
W_R, G, KAPPA = 2 * math.pi * 7.0, 2 * math.pi * 0.05, 2 * math.pi * 1e-3


def test_static_displacement_settles_on_steady_state():
    alpha = langevin_displacement_static(W_R, G, KAPPA, [0.0, 1e5], qubit_state=-1)
    assert alpha[0] == 0
    assert alpha[1] == pytest.approx(static_steady_state(W_R, G, KAPPA, -1), rel=1e-9)
    assert static_steady_state(W_R, G, KAPPA, 1) == pytest.approx(-static_steady_state(W_R, G, KAPPA, -1))


def test_modulated_displacement_grows_to_g_over_kappa():
    alpha = langevin_displacement_modulated(G, KAPPA, [0.0, 1e5])
    assert alpha[1] == pytest.approx(modulated_steady_state(G, KAPPA), rel=1e-9)
    assert abs(modulated_steady_state(G, KAPPA)) == pytest.approx(G / KAPPA)


def test_boost_ratio():
    assert boost_ratio(W_R, G, G, KAPPA) == pytest.approx(abs(W_R - 0.5j * KAPPA) / KAPPA)
    summary = readout_summary(W_R, G, G, KAPPA)
    assert summary.separation_modulated / summary.separation_static == pytest.approx(summary.boost)
    assert summary.notes == []
    assert readout_summary(1.0, 0.01, 0.01, 0.05).notes


def test_readout_trace_labels():
    trace = readout_trace(W_R, G, KAPPA, np.linspace(0, 10, 5), qubit_state=-1, modulated=True)
    assert trace.label == "modulated"
    assert trace.alpha.shape == (5,)
    assert trace.meta["kappa"] == KAPPA
    with pytest.raises(DomainError):
        readout_trace(W_R, G, KAPPA, [0.0, 1.0], qubit_state=0)
    with pytest.raises(DomainError):
        langevin_displacement_static(W_R, G, 0.0, [0.0])


def test_cavity_integration_reproduces_static_response():
    times = np.linspace(0.0, 100.0, 51)
    numeric = integrate_cavity(1.0, 0.05, lambda t: 0.01, times, qubit_state=1)
    np.testing.assert_allclose(numeric, langevin_displacement_static(1.0, 0.01, 0.05, times, 1), atol=1e-8)


def test_lab_frame_modulation_matches_rotating_frame():
    times = np.linspace(300.0, 400.0, 11)
    grid = np.concatenate([[0.0], times])
    lab = integrate_modulated_lab_frame(1.0, 0.0, 0.01, 0.02, grid)[1:]
    rwa = langevin_displacement_modulated(0.01, 0.02, times)
    np.testing.assert_allclose(np.abs(lab), np.abs(rwa), rtol=2e-2)


def test_open_bath_capacitor_decouples(k1):
    open_bath = BathSpec(R=50.0, C_Z=0.0, T=0.02)
    assert math.isinf(resonator_decoherence(k1, 0.0, open_bath, 5.0).T1)
    assert math.isinf(t1_closed_form(k1, 0.0, open_bath, 5.0))


def test_modulated_separation_scales_inversely_with_kappa():
    separations = [readout_summary(W_R, G, G, k).separation_modulated for k in (KAPPA, 10 * KAPPA, 100 * KAPPA)]
    assert separations[0] / separations[1] == pytest.approx(10.0)
    assert separations[1] / separations[2] == pytest.approx(10.0)
