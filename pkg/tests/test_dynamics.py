import math

import numpy as np
import pytest

from src.core.dynamics import (
    CZ,
    LongitudinalSystem,
    RabiSystem,
    TwoQubitTwoResonatorSystem,
    carrier_system,
    dispersive_shift_rabi,
    dressed_shift_oracle,
    fix_global_phase,
    flux_drive_term,
    jc_hamiltonian,
    lang_firsov_diagonalize,
    longitudinal_energies,
    phase_gate_simulate,
    populations,
    propagate_ode,
    propagate_piecewise,
    qubit_drive_operator,
    rabi_hamiltonian,
    sideband_frequency_table,
    sw_residual,
    two_block_diagonal_form,
    two_block_longitudinal_hamiltonian,
)
from src.core.errors import DomainError, NearResonanceError, ResourceError, ShapeError
from src.core.fockops import CompositeSpace


# -----------------------------------------------------------------------------
# Dispersive regime
# -----------------------------------------------------------------------------
def test_rabi_hamiltonian_shape():
    sys = RabiSystem(omega_r=7.0, Delta=5.5, g=0.05, N=6)
    H = rabi_hamiltonian(sys)
    assert H.dim == 12
    assert H.is_hermitian()


@pytest.mark.parametrize("model,builder", [("rabi", rabi_hamiltonian), ("jc", jc_hamiltonian)])
def test_dispersive_shift_matches_dressed_levels(model, builder):
    sys = RabiSystem(omega_r=7.0, Delta=5.5, g=0.05, N=20)
    result = dispersive_shift_rabi(sys, model)
    assert result.dispersive
    assert result.gamma == pytest.approx(0.05 / -1.5)
    oracle = dressed_shift_oracle(builder(sys), sys.space)
    assert result.chi == pytest.approx(oracle, rel=2e-2)


def test_counter_rotating_terms_shift_chi():
    sys = RabiSystem(omega_r=7.0, Delta=5.5, g=0.05, N=20)
    rabi = dispersive_shift_rabi(sys, "rabi")
    jc = dispersive_shift_rabi(sys, "jc")
    assert rabi.gamma_bar == pytest.approx(0.05 / 12.5)
    assert rabi.chi - jc.chi == pytest.approx(0.05 ** 2 / 12.5)


def test_dispersive_shift_refuses_near_resonance():
    with pytest.raises(NearResonanceError):
        dispersive_shift_rabi(RabiSystem(omega_r=7.0, Delta=7.0, g=0.05))
    with pytest.raises(NearResonanceError):
        dispersive_shift_rabi(RabiSystem(omega_r=7.0, Delta=6.8, g=0.05))
    with pytest.raises(DomainError):
        dispersive_shift_rabi(RabiSystem(omega_r=7.0, Delta=5.5, g=0.05), "bloch")
    assert dispersive_shift_rabi(RabiSystem(omega_r=7.0, Delta=7.0, g=0.0)).chi == 0.0


def test_schrieffer_wolff_residual_is_third_order():
    small = sw_residual(RabiSystem(omega_r=7.0, Delta=5.5, g=0.01, N=15))
    large = sw_residual(RabiSystem(omega_r=7.0, Delta=5.5, g=0.02, N=15))
    assert 6.0 < large / small < 10.0
    with pytest.raises(ResourceError):
        sw_residual(RabiSystem(omega_r=7.0, Delta=5.5, g=0.01, N=4))


# -----------------------------------------------------------------------------
# Longitudinal coupling
# -----------------------------------------------------------------------------
def test_lang_firsov_removes_longitudinal_coupling():
    sys = LongitudinalSystem(omega_r=7.0, Delta=5.0, g_zx=0.05, N=30)
    result = lang_firsov_diagonalize(sys, margin=8)
    assert result.theta == pytest.approx(0.05 / 7.0)
    assert result.offdiagonal_residual < 1e-9
    assert result.shift == pytest.approx(-0.05 ** 2 / 7.0)
    # level 0 of the qubit is sigma_z = -1
    assert result.ground_energy() == pytest.approx(-2.5 - 0.05 ** 2 / 7.0, abs=1e-10)

    space = sys.space
    interior = [space.flatten((q, n)) for q in (0, 1) for n in range(result.interior_levels)]
    diagonal = np.sort(np.real(np.diag(result.transformed.matrix)[interior]))
    np.testing.assert_allclose(diagonal, longitudinal_energies(sys, result.interior_levels), atol=1e-9)


def test_lang_firsov_needs_room_and_positive_frequencies():
    with pytest.raises(ResourceError):
        lang_firsov_diagonalize(LongitudinalSystem(omega_r=7.0, Delta=5.0, g_zx=0.05, N=5), margin=5)
    with pytest.raises(DomainError):
        LongitudinalSystem(omega_r=-1.0, Delta=5.0, g_zx=0.05)


def test_two_block_diagonal_form_matches_dense_spectrum():
    sys = TwoQubitTwoResonatorSystem(omega_r1=7.0, omega_r2=6.8, Delta1=5.0, Delta2=5.3,
                                     g1=0.05, g2=0.04, g_c=0.03, dims=(2, 8, 8, 2))
    form = two_block_diagonal_form(sys)
    assert form.omega_modes[0] > form.omega_modes[1]
    assert form.zz != 0.0
    energies, vecs = np.linalg.eigh(two_block_longitudinal_hamiltonian(sys).matrix)
    space = sys.space
    for q1 in (0, 1):
        for q2 in (0, 1):
            idx = int(np.argmax(np.abs(vecs[space.flatten((q1, 0, 0, q2)), :]) ** 2))
            expected = form.energy(2 * q1 - 1, 2 * q2 - 1, 0, 0, sys.Delta1, sys.Delta2)
            assert energies[idx] == pytest.approx(expected, abs=1e-9)


def test_uncoupled_resonators_leave_no_zz():
    sys = TwoQubitTwoResonatorSystem(omega_r1=7.0, omega_r2=6.8, Delta1=5.0, Delta2=5.3, g1=0.05, g2=0.04)
    assert two_block_diagonal_form(sys).zz == pytest.approx(0.0, abs=1e-15)


def test_sideband_table():
    sys = TwoQubitTwoResonatorSystem(omega_r1=7.0, omega_r2=6.5, Delta1=5.0, Delta2=5.13)
    table = sideband_frequency_table(sys)
    assert (table.omega_plus, table.omega_minus) == pytest.approx((7.0, 6.5))
    assert len(table.entries) == 18
    assert table.entries["q1"] == 5.0
    assert table.entries["q1-r+"] == pytest.approx(2.0)
    assert table.entries["q2+r+-r-"] == pytest.approx(5.63)
    assert table.collision_free


def test_sideband_collision_is_reported():
    sys = TwoQubitTwoResonatorSystem(omega_r1=7.0, omega_r2=6.5, Delta1=3.25, Delta2=5.13)
    table = sideband_frequency_table(sys)
    assert not table.collision_free
    assert ("q1", "q1-r-") in table.collisions


# -----------------------------------------------------------------------------
# Controlled phase
# -----------------------------------------------------------------------------
def test_phase_gate_is_controlled_z():
    result = phase_gate_simulate([0.5, 0.5, 0.5, 0.5])
    assert result.fidelity == pytest.approx(1.0, abs=1e-12)
    assert result.leakage == pytest.approx(0.0, abs=1e-12)
    np.testing.assert_allclose(result.computational, CZ, atol=1e-12)
    np.testing.assert_allclose(result.output_amplitudes, [0.5, 0.5, 0.5, -0.5], atol=1e-12)


def test_phase_gate_normalizes_input():
    result = phase_gate_simulate([0, 0, 0, 3j], dims=(2, 3, 3, 2))
    np.testing.assert_allclose(np.abs(result.output_amplitudes), [0, 0, 0, 1], atol=1e-12)
    data = result.as_dict()
    assert data["input"][3] == [1.0, 0.0]


@pytest.mark.parametrize("amps,dims,error", [
    ([1, 0, 0], (2, 4, 4, 2), ShapeError),
    ([1, 0, 0, 0], (3, 4, 4, 2), ShapeError),
    ([1, 0, 0, 0], (2, 2, 4, 2), ResourceError),
    ([0, 0, 0, 0], (2, 4, 4, 2), DomainError),
])
def test_phase_gate_rejects_bad_input(amps, dims, error):
    with pytest.raises(error):
        phase_gate_simulate(amps, dims)


def test_fix_global_phase():
    np.testing.assert_allclose(fix_global_phase([0, -1j, 1]), [0, 1, 1j])


# -----------------------------------------------------------------------------
# Drive and propagation
# -----------------------------------------------------------------------------
def test_flux_drive_amplitude():
    drive = flux_drive_term(0.1, 5.0, ej_q=10.0, phi_zpf=0.3)
    assert drive.amplitude == pytest.approx(0.3)
    assert drive.coefficient(0.0) == pytest.approx(0.3)
    assert drive.warnings == ()
    assert len(flux_drive_term(0.5, 5.0, ej_q=10.0, phi_zpf=0.3).warnings) == 1
    with pytest.raises(DomainError):
        flux_drive_term(0.1, 5.0, ej_q=10.0)


def test_resonant_drive_flips_the_qubit():
    Delta, amplitude = 10.0, 0.1
    space = CompositeSpace((2,))
    drive = flux_drive_term(amplitude, Delta, ej_q=1.0, phi_zpf=1.0)
    drives = [(qubit_drive_operator(space, 0), drive.coefficient)]
    H0 = carrier_system(Delta)
    psi0 = space.product_state((0,))
    t_flip = math.pi / amplitude
    times, states = propagate_piecewise(H0, drives, psi0, t_flip, dt=0.002, record_every=500)
    assert times[-1] == pytest.approx(t_flip)
    excited = populations(states, space, (1,))
    assert excited[-1] > 0.99
    exact = propagate_ode(H0, drives, psi0, times)
    np.testing.assert_allclose(populations(exact, space, (1,)), excited, atol=2e-3)


def test_static_propagation_keeps_populations():
    space = CompositeSpace((2,))
    psi0 = np.array([1.0, 1.0]) / math.sqrt(2)
    times, states = propagate_piecewise(carrier_system(3.0), [], psi0, 2.0, dt=0.1)
    assert len(times) == 21
    np.testing.assert_allclose(populations(states, space, (0,)), 0.5)
    # relative phase advances at the qubit frequency
    assert np.angle(states[-1][1] / states[-1][0]) == pytest.approx(np.angle(np.exp(-1j * 3.0 * 2.0)))
    with pytest.raises(DomainError):
        propagate_piecewise(carrier_system(3.0), [], psi0, 1.0, dt=0.0)


def test_lang_firsov_spacing_does_not_depend_on_the_qubit():
    sys = LongitudinalSystem(omega_r=7.0, Delta=5.0, g_zx=0.05, N=40)
    result = lang_firsov_diagonalize(sys, margin=10)
    H = result.transformed.matrix
    assert result.offdiagonal_residual < 1e-8 * np.linalg.norm(H)
    space = sys.space
    for n in range(result.interior_levels - 1):
        lower = np.real(H[space.flatten((0, n + 1)), space.flatten((0, n + 1))] - H[space.flatten((0, n)), space.flatten((0, n))])
        upper = np.real(H[space.flatten((1, n + 1)), space.flatten((1, n + 1))] - H[space.flatten((1, n)), space.flatten((1, n))])
        assert lower == pytest.approx(upper, abs=1e-10)
