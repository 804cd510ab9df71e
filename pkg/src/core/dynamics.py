# src/core/dynamics.py
"""
Truncated-space Hamiltonians of a qubit coupled to resonators and the
transformations that diagonalize them: Schrieffer-Wolff for transverse
coupling, Lang-Firsov for longitudinal coupling, sideband frequency planning
and the three-pulse controlled-phase sequence.

All frequencies share one angular unit (rad/ns if GHz*2pi is used); times are
in its inverse. Composite spaces order the factors (qubit, resonator), and
(q1, r1, r2, q2) for two blocks.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from scipy.integrate import solve_ivp

from .errors import DomainError, NearResonanceError, ResourceError, ShapeError
from .fockops import (
    CompositeSpace,
    FockOperator,
    annihilation,
    identity,
    matrix_exponential,
    sigma,
    tensor_embed,
)
from .models import ModeSpectrum
from .multiblock import dressed_frequencies
from .settings import get_settings

logger = logging.getLogger(__name__)

QUBIT, RESONATOR = 0, 1


def _dim(N: Optional[int]) -> int:
    return int(N) if N else get_settings().fock_dim


@dataclass(frozen=True)
class RabiSystem:
    omega_r: float
    Delta: float
    g: float
    N: Optional[int] = None

    @property
    def detuning(self) -> float:
        return self.Delta - self.omega_r

    @property
    def space(self) -> CompositeSpace:
        return CompositeSpace((2, _dim(self.N)))

    @property
    def is_dispersive(self) -> bool:
        return get_settings().is_dispersive(self.g, self.detuning)


@dataclass(frozen=True)
class LongitudinalSystem:
    omega_r: float
    Delta: float
    g_zx: float
    N: Optional[int] = None

    def __post_init__(self):
        if self.omega_r <= 0 or self.Delta <= 0:
            raise DomainError("Frequencies must be positive", omega_r=self.omega_r, Delta=self.Delta)

    @property
    def space(self) -> CompositeSpace:
        return CompositeSpace((2, _dim(self.N)))

    @property
    def theta(self) -> float:
        return self.g_zx / self.omega_r


@dataclass(frozen=True)
class TwoQubitTwoResonatorSystem:
    omega_r1: float
    omega_r2: float
    Delta1: float
    Delta2: float
    g1: float = 0.0
    g2: float = 0.0
    g_c: float = 0.0
    dims: Tuple[int, int, int, int] = (2, 4, 4, 2)

    @property
    def space(self) -> CompositeSpace:
        return CompositeSpace(self.dims)


# -----------------------------------------------------------------------------
# Hamiltonians
# -----------------------------------------------------------------------------
def _mode_ops(space: CompositeSpace, qslot: int, rslot: int):
    a = tensor_embed(annihilation(space.factors[rslot]), space, rslot)
    sz = tensor_embed(sigma("z"), space, qslot)
    return a, sz


def rabi_hamiltonian(sys: RabiSystem) -> FockOperator:
    """omega_r a^dag a + Delta/2 sigma_z + g sigma_x (a + a^dag)."""
    space = sys.space
    a, sz = _mode_ops(space, QUBIT, RESONATOR)
    sx = tensor_embed(sigma("x"), space, QUBIT)
    return sys.omega_r * (a.dagger() @ a) + 0.5 * sys.Delta * sz + sys.g * (sx @ (a + a.dagger()))


def jc_hamiltonian(sys: RabiSystem) -> FockOperator:
    space = sys.space
    a, sz = _mode_ops(space, QUBIT, RESONATOR)
    sp = tensor_embed(sigma("+"), space, QUBIT)
    coupling = sp @ a + sp.dagger() @ a.dagger()
    return sys.omega_r * (a.dagger() @ a) + 0.5 * sys.Delta * sz + sys.g * coupling


def longitudinal_hamiltonian(sys: LongitudinalSystem) -> FockOperator:
    """omega_r a^dag a + Delta/2 sigma_z + g_zx sigma_z (a + a^dag)."""
    a, sz = _mode_ops(sys.space, QUBIT, RESONATOR)
    return sys.omega_r * (a.dagger() @ a) + 0.5 * sys.Delta * sz + sys.g_zx * (sz @ (a + a.dagger()))


# -----------------------------------------------------------------------------
# Dispersive regime
# -----------------------------------------------------------------------------
@dataclass(frozen=True)
class DispersiveResult:
    chi: float
    gamma: float
    gamma_bar: float
    model: str
    dispersive: bool


def dispersive_shift_rabi(sys: RabiSystem, model: str = "rabi") -> DispersiveResult:
    """
    Second-order dispersive shift. For the Rabi model chi = g (gamma + gamma_bar)
    with gamma = g/(Delta - omega_r), gamma_bar = g/(Delta + omega_r); the JC
    model keeps only gamma.
    """
    if model not in ("rabi", "jc"):
        raise DomainError(f"Unknown model {model!r}", allowed=["rabi", "jc"])
    if sys.g == 0:
        return DispersiveResult(0.0, 0.0, 0.0, model, True)
    if sys.detuning == 0 or not sys.is_dispersive:
        raise NearResonanceError(
            "Qubit and resonator are too close for the dispersive expansion",
            g=sys.g, detuning=sys.detuning, threshold=get_settings().dispersive_threshold,
        )
    gamma = sys.g / sys.detuning
    gamma_bar = sys.g / (sys.Delta + sys.omega_r) if model == "rabi" else 0.0
    return DispersiveResult(sys.g * (gamma + gamma_bar), gamma, gamma_bar, model, True)


def dispersive_hamiltonian(sys: RabiSystem, chi: Optional[float] = None) -> FockOperator:
    """omega_r a^dag a + Delta/2 sigma_z + chi/2 sigma_z (a + a^dag)^2, the Rabi model to second order."""
    chi = dispersive_shift_rabi(sys).chi if chi is None else chi
    a, sz = _mode_ops(sys.space, QUBIT, RESONATOR)
    x = a + a.dagger()
    return sys.omega_r * (a.dagger() @ a) + 0.5 * sys.Delta * sz + 0.5 * chi * (sz @ x @ x)


def schrieffer_wolff_generator(sys: RabiSystem) -> FockOperator:
    """Anti-hermitian S with [S, H0] = -V for the Rabi coupling V."""
    space = sys.space
    a, _ = _mode_ops(space, QUBIT, RESONATOR)
    sp = tensor_embed(sigma("+"), space, QUBIT)
    gamma = sys.g / sys.detuning
    gamma_bar = sys.g / (sys.Delta + sys.omega_r)
    X = gamma * (sp @ a) + gamma_bar * (sp @ a.dagger())
    return X - X.dagger()


def _interior_mask(space: CompositeSpace, slot: int, keep: int) -> np.ndarray:
    return np.array([space.unflatten(i)[slot] < keep for i in range(space.total_dim)])


def _qubit_offdiagonal(matrix: np.ndarray, space: CompositeSpace, qslot: int, keep: int) -> float:
    """Norm of the qubit-flipping part of matrix on the truncation interior."""
    mask = _interior_mask(space, 1 - qslot, keep)
    levels = np.array([space.unflatten(i)[qslot] for i in range(space.total_dim)])
    flip = levels[:, None] != levels[None, :]
    block = np.where(flip & mask[:, None] & mask[None, :], matrix, 0.0)
    return float(np.linalg.norm(block))


def sw_residual(sys: RabiSystem, margin: int = 5) -> float:
    """
    Qubit-flipping norm left in exp(S) H exp(-S), measured below the last
    margin resonator levels; scales as g^3 / detuning^2.
    """
    space = sys.space
    if space.factors[RESONATOR] <= margin:
        raise ResourceError("Truncation too small for the requested margin", N=space.factors[RESONATOR])
    S = schrieffer_wolff_generator(sys)
    U = matrix_exponential(S)
    transformed = U.matrix @ rabi_hamiltonian(sys).matrix @ U.dagger().matrix
    return _qubit_offdiagonal(transformed, space, QUBIT, space.factors[RESONATOR] - margin)


def _dressed_index(eigvecs: np.ndarray, bare: int) -> int:
    return int(np.argmax(np.abs(eigvecs[bare, :]) ** 2))


def dressed_shift_oracle(H: FockOperator, space: CompositeSpace) -> float:
    """
    Half the difference of the resonator 0->1 spacing with the qubit in |1> and |0>,
    from a dense eigensolve; states labelled by largest overlap with bare states.
    """
    energies, vecs = scipy.linalg.eigh(H.matrix)

    def level(q: int, n: int) -> float:
        return float(energies[_dressed_index(vecs, space.flatten((q, n)))])

    excited = level(1, 1) - level(1, 0)
    ground = level(0, 1) - level(0, 0)
    return 0.5 * (excited - ground)


# -----------------------------------------------------------------------------
# Longitudinal coupling
# -----------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class LangFirsovResult:
    theta: float
    unitary: FockOperator
    transformed: FockOperator
    # constant energy shift -g^2/omega_r
    shift: float
    offdiagonal_residual: float
    interior_levels: int

    def ground_energy(self) -> float:
        return float(np.real(self.transformed.matrix[0, 0]))


def lang_firsov_unitary(sys: LongitudinalSystem) -> FockOperator:
    """U = exp(theta sigma_z (a^dag - a)) with theta = g_zx/omega_r."""
    a, sz = _mode_ops(sys.space, QUBIT, RESONATOR)
    if sys.g_zx == 0:
        return identity(sys.space.total_dim)
    return matrix_exponential(sz @ (a.dagger() - a), sys.theta)


def lang_firsov_diagonalize(sys: LongitudinalSystem, margin: int = 5) -> LangFirsovResult:
    """
    U H U^dag for the longitudinal Hamiltonian. The transformation is exact; the
    residual is measured on the first N - margin resonator levels, where the
    truncated exponential agrees with the displacement.
    """
    space = sys.space
    N = space.factors[RESONATOR]
    if N <= margin:
        raise ResourceError("Truncation too small for the requested margin", N=N, margin=margin)
    U = lang_firsov_unitary(sys)
    Ht = U.matrix @ longitudinal_hamiltonian(sys).matrix @ U.dagger().matrix
    mask = _interior_mask(space, RESONATOR, N - margin)
    block = Ht[np.ix_(mask, mask)]
    residual = float(np.linalg.norm(block - np.diag(np.diag(block))))
    logger.debug("lang-firsov: theta=%.4g residual=%.3g on %d interior levels", sys.theta, residual, N - margin)
    return LangFirsovResult(
        theta=sys.theta, unitary=U, transformed=FockOperator(space.total_dim, Ht, "UHU^dag"),
        shift=-sys.g_zx ** 2 / sys.omega_r, offdiagonal_residual=residual, interior_levels=N - margin,
    )


def longitudinal_energies(sys: LongitudinalSystem, levels: int) -> np.ndarray:
    """Sorted omega_r n +/- Delta/2 - g^2/omega_r for n < levels."""
    shift = -sys.g_zx ** 2 / sys.omega_r
    values = [sys.omega_r * n + s * 0.5 * sys.Delta + shift for n in range(levels) for s in (-1, 1)]
    return np.sort(np.array(values))


# -----------------------------------------------------------------------------
# Two blocks
# -----------------------------------------------------------------------------
def two_block_longitudinal_hamiltonian(sys: TwoQubitTwoResonatorSystem) -> FockOperator:
    """Both blocks longitudinally coupled, resonators joined by a beam splitter g_c."""
    space = sys.space
    a1, sz1 = _mode_ops(space, 0, 1)
    a2, sz2 = _mode_ops(space, 3, 2)
    H = sys.omega_r1 * (a1.dagger() @ a1) + sys.omega_r2 * (a2.dagger() @ a2)
    H = H + 0.5 * sys.Delta1 * sz1 + 0.5 * sys.Delta2 * sz2
    H = H + sys.g1 * (sz1 @ (a1 + a1.dagger())) + sys.g2 * (sz2 @ (a2 + a2.dagger()))
    return H + sys.g_c * (a1.dagger() @ a2 + a2.dagger() @ a1)


@dataclass(frozen=True)
class TwoBlockDiagonalForm:
    # normal-mode frequencies, (upper, lower)
    omega_modes: Tuple[float, float]
    # mixing matrix, rows = modes, columns = (r1, r2)
    mixing: np.ndarray
    # sigma_z1 sigma_z2 coefficient induced through the shared modes
    zz: float
    # qubit-independent constant
    constant: float

    def energy(self, s1: int, s2: int, n_plus: int, n_minus: int, Delta1: float, Delta2: float) -> float:
        return (self.omega_modes[0] * n_plus + self.omega_modes[1] * n_minus
                + 0.5 * Delta1 * s1 + 0.5 * Delta2 * s2 + self.zz * s1 * s2 + self.constant)


def two_block_diagonal_form(sys: TwoQubitTwoResonatorSystem) -> TwoBlockDiagonalForm:
    """
    Diagonalize the resonator pair into normal modes, then displace each mode by
    the qubit-state dependent amount; leaves a sigma_z sigma_z term and a constant.
    """
    M = np.array([[sys.omega_r1, sys.g_c], [sys.g_c, sys.omega_r2]])
    w, v = np.linalg.eigh(M)
    if w.min() <= 0:
        raise DomainError("Beam-splitter coupling too strong; a normal mode has non-positive frequency", g_c=sys.g_c)
    order = np.argsort(w)[::-1]
    w, v = w[order], v[:, order]
    g = np.array([sys.g1, sys.g2])
    # c[m, i]: coupling of qubit i to mode m
    c = v.T * g[None, :]
    zz = -2.0 * float(np.sum(c[:, 0] * c[:, 1] / w))
    constant = -float(np.sum((c[:, 0] ** 2 + c[:, 1] ** 2) / w))
    return TwoBlockDiagonalForm(omega_modes=(float(w[0]), float(w[1])), mixing=v.T, zz=zz, constant=constant)


@dataclass(frozen=True)
class SidebandTable:
    omega_plus: float
    omega_minus: float
    entries: Dict[str, float]
    collisions: List[Tuple[str, str]] = field(default_factory=list)

    @property
    def collision_free(self) -> bool:
        return not self.collisions


def sideband_frequency_table(sys: TwoQubitTwoResonatorSystem, guard: Optional[float] = None) -> SidebandTable:
    """
    Drive frequencies addressing each qubit: the carrier Delta_i, one-mode
    sidebands |Delta_i -/+ omega_m| and two-mode sidebands |Delta_i +/- omega_+ +/- omega_-|.
    Each qubit has its own flux line, so collisions are checked per qubit.
    """
    guard = get_settings().sideband_guard if guard is None else guard
    w_plus, w_minus = dressed_frequencies(sys.omega_r1, sys.omega_r2, sys.g_c)
    entries: Dict[str, float] = {}
    collisions: List[Tuple[str, str]] = []
    for i, Delta in ((1, sys.Delta1), (2, sys.Delta2)):
        own: Dict[str, float] = {f"q{i}": Delta}
        for label, w in (("+", w_plus), ("-", w_minus)):
            own[f"q{i}-r{label}"] = abs(Delta - w)
            own[f"q{i}+r{label}"] = Delta + w
        for sp in (1, -1):
            for sm in (1, -1):
                key = f"q{i}{'+' if sp > 0 else '-'}r+{'+' if sm > 0 else '-'}r-"
                own[key] = abs(Delta + sp * w_plus + sm * w_minus)
        names = sorted(own, key=lambda k: (own[k], k))
        for n1, n2 in zip(names, names[1:]):
            if abs(own[n2] - own[n1]) < guard:
                collisions.append((n1, n2))
        entries.update(own)
    if collisions:
        logger.warning("sidebands: %d colliding pair(s) within %.3g", len(collisions), guard)
    return SidebandTable(omega_plus=w_plus, omega_minus=w_minus, entries=entries, collisions=collisions)


# -----------------------------------------------------------------------------
# Controlled-phase sequence
# -----------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class GateResult:
    input_amplitudes: np.ndarray
    output_amplitudes: np.ndarray
    # full operator on the truncated space
    unitary: np.ndarray
    # 4x4 block on |q1 0 0 q2>
    computational: np.ndarray
    fidelity: float
    leakage: float

    def as_dict(self) -> Dict[str, object]:
        def pairs(v):
            return [[float(np.real(z)), float(np.imag(z))] for z in v]
        return {
            "input": pairs(self.input_amplitudes),
            "output": pairs(self.output_amplitudes),
            "fidelity": self.fidelity,
            "leakage": self.leakage,
        }


CZ = np.diag([1.0, 1.0, 1.0, -1.0]).astype(complex)


def fix_global_phase(state: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Rotate so the first nonzero amplitude is real and positive."""
    state = np.asarray(state, dtype=complex)
    for z in state:
        if abs(z) > tol:
            return state * (abs(z) / z)
    return state


def phase_gate_generators(space: CompositeSpace) -> Tuple[FockOperator, FockOperator]:
    """Map generator a2^dag s2^- + a2 s2^+ and selective-phase generator s1^+ a1^dag a2 + s1^- a1 a2^dag."""
    a1 = tensor_embed(annihilation(space.factors[1]), space, 1)
    a2 = tensor_embed(annihilation(space.factors[2]), space, 2)
    sp1 = tensor_embed(sigma("+"), space, 0)
    sp2 = tensor_embed(sigma("+"), space, 3)
    g_map = a2.dagger() @ sp2.dagger() + a2 @ sp2
    g_phase = sp1 @ a1.dagger() @ a2 + sp1.dagger() @ a1 @ a2.dagger()
    return g_map, g_phase


def phase_gate_simulate(initial: Sequence[complex], dims: Tuple[int, int, int, int] = (2, 4, 4, 2)) -> GateResult:
    """
    Map qubit 2 onto resonator 2, drive the two-resonator sideband of qubit 1
    for a full period, map back. Resonators start in vacuum.
    """
    amps = np.asarray(initial, dtype=complex)
    if amps.shape != (4,):
        raise ShapeError("Initial state needs four amplitudes (A00, A01, A10, A11)")
    if dims[0] != 2 or dims[3] != 2:
        raise ShapeError("Qubit factors must be two-level", dims=list(dims))
    if min(dims[1], dims[2]) < 3:
        raise ResourceError("Resonator truncation needs at least three levels", dims=list(dims))
    norm = np.linalg.norm(amps)
    if norm == 0:
        raise DomainError("Initial state is zero")
    amps = amps / norm

    space = CompositeSpace(dims)
    g_map, g_phase = phase_gate_generators(space)
    pulse_map = matrix_exponential(g_map, -0.5j * math.pi)
    pulse_phase = matrix_exponential(g_phase, -1j * math.pi)
    U = (pulse_map @ pulse_phase @ pulse_map).matrix

    comp = [space.flatten((q1, 0, 0, q2)) for q1 in (0, 1) for q2 in (0, 1)]
    psi = np.zeros(space.total_dim, dtype=complex)
    psi[comp] = amps
    out = U @ psi
    block = U[np.ix_(comp, comp)]
    block = block / (block[0, 0] / abs(block[0, 0]))
    fidelity = float(abs(np.trace(CZ.conj().T @ block)) / 4.0)
    out_comp = out[comp]
    leakage = float(max(0.0, 1.0 - np.sum(np.abs(out_comp) ** 2)))
    logger.info("phase gate: fidelity=%.12f leakage=%.3g", fidelity, leakage)
    return GateResult(input_amplitudes=fix_global_phase(amps), output_amplitudes=fix_global_phase(out_comp),
                      unitary=U, computational=block, fidelity=fidelity, leakage=leakage)


# -----------------------------------------------------------------------------
# Flux drive and time evolution
# -----------------------------------------------------------------------------
@dataclass(frozen=True)
class FluxDrive:
    phi_d: float
    omega_d: float
    # transverse amplitude Omega of Omega cos(omega_d t) sigma_x
    amplitude: float
    warnings: Tuple[str, ...] = ()

    def coefficient(self, t: float) -> float:
        return self.amplitude * math.cos(self.omega_d * t)


def flux_drive_term(phi_d: float, omega_d: float, qubit: Optional[ModeSpectrum] = None,
                    ej_q: float = 0.0, phi_zpf: Optional[float] = None) -> FluxDrive:
    """
    First-order expansion of E_Jq cos(phi_q + phi_d cos(omega_d t)): the drive is
    E_Jq phi_d sin(phi_q) cos(omega_d t) with sin(phi_q) -> phi_zpf sigma_x.
    """
    zpf = qubit.phi_zpf if qubit is not None else phi_zpf
    if zpf is None:
        raise DomainError("Need the qubit mode or its zero-point amplitude")
    warnings: List[str] = []
    limit = get_settings().drive_linear_limit
    if abs(phi_d) > limit:
        warnings.append(f"|phi_d| = {abs(phi_d):.3g} exceeds {limit:.3g}; first-order drive expansion is unreliable")
        logger.warning("drive: %s", warnings[-1])
    return FluxDrive(phi_d=phi_d, omega_d=omega_d, amplitude=ej_q * phi_d * zpf, warnings=tuple(warnings))


Drive = Tuple[FockOperator, Callable[[float], float]]


def _h_at(H0: np.ndarray, drives: Sequence[Drive], t: float) -> np.ndarray:
    H = H0.copy()
    for op, f in drives:
        H = H + f(t) * op.matrix
    return H


def propagate_piecewise(H0: FockOperator, drives: Sequence[Drive], psi0: np.ndarray,
                        t_final: float, dt: float, record_every: int = 1) -> Tuple[np.ndarray, np.ndarray]:
    """
    Piecewise-constant propagation, H sampled at each step midpoint.
    Returns (times, states) with states[i] the state at times[i].
    """
    if dt <= 0 or t_final < 0:
        raise DomainError("Need dt > 0 and t_final >= 0", dt=dt, t_final=t_final)
    steps = int(math.ceil(t_final / dt - 1e-12))
    psi = np.asarray(psi0, dtype=complex).copy()
    times, states = [0.0], [psi.copy()]
    static = not drives
    step_static = scipy.linalg.expm(-1j * dt * H0.matrix) if static else None
    t = 0.0
    for n in range(steps):
        h = min(dt, t_final - t)
        if static and h == dt:
            psi = step_static @ psi
        else:
            psi = scipy.linalg.expm(-1j * h * _h_at(H0.matrix, drives, t + 0.5 * h)) @ psi
        t += h
        if (n + 1) % record_every == 0 or n == steps - 1:
            times.append(t)
            states.append(psi.copy())
    return np.array(times), np.array(states)


def propagate_ode(H0: FockOperator, drives: Sequence[Drive], psi0: np.ndarray, t_eval: Sequence[float],
                  rtol: float = 1e-10, atol: float = 1e-12) -> np.ndarray:
    """Schrodinger equation through solve_ivp; rows are states at t_eval."""
    t_eval = np.asarray(t_eval, dtype=float)

    def rhs(t, y):
        return -1j * (_h_at(H0.matrix, drives, t) @ y)

    sol = solve_ivp(rhs, (float(t_eval[0]), float(t_eval[-1])), np.asarray(psi0, dtype=complex),
                    method="DOP853", t_eval=t_eval, rtol=rtol, atol=atol)
    if not sol.success:
        raise DomainError(f"Time integration failed: {sol.message}")
    return sol.y.T


def populations(states: np.ndarray, space: CompositeSpace, levels: Sequence[int]) -> np.ndarray:
    return np.abs(np.asarray(states)[:, space.flatten(levels)]) ** 2


def qubit_drive_operator(space: CompositeSpace, slot: int = QUBIT) -> FockOperator:
    return tensor_embed(sigma("x"), space, slot)


def carrier_system(Delta: float) -> FockOperator:
    """Bare qubit Delta/2 sigma_z, for drive checks."""
    return 0.5 * Delta * sigma("z")
