# src/core/dissipation.py
"""
System-bath treatment of the coupler and cavity readout.

The bath is an impedance Z(w) = R + 1/(i w C_Z) attached through C_g to both
qubit nodes. Inside this module everything is SI: capacitances are converted
from fF on entry, frequencies are angular (rad/s), times in seconds.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Union

import numpy as np
from scipy.integrate import solve_ivp

from .errors import DomainError
from .models import CouplerParams, DecoherenceTimes, ModeSpectrum, ReadoutTrace
from .settings import get_settings
from .spectrum import eta
from .units import angular_to_ghz, hbar, kB

logger = logging.getLogger(__name__)

FF = 1e-15
NH = 1e-9

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class BathSpec:
    # Ohm
    R: float
    # fF
    C_Z: float
    # K; None takes the configured temperature
    T: Optional[float] = None

    def __post_init__(self):
        if self.R < 0:
            raise DomainError("Bath resistance must not be negative", R=self.R)
        if self.C_Z < 0:
            raise DomainError("Bath capacitance must not be negative", C_Z=self.C_Z)
        if self.T is not None and self.T <= 0:
            raise DomainError("Temperature must be positive", T=self.T)

    @property
    def temperature(self) -> float:
        return self.T if self.T is not None else get_settings().temperature


def _spectral_parts(C: float, Cg: float, bath: BathSpec):
    c, cg, cz = C * FF, Cg * FF, bath.C_Z * FF
    num = (c + cg) ** 2 * cz ** 2 * bath.R
    base = 2.0 * cg * (c + 2.0 * cg) + (c + cg) * cz
    quad = 4.0 * cg ** 2 * (c + 2.0 * cg) ** 2 * cz ** 2 * bath.R ** 2
    return num, base, quad


def spectral_density(C: float, Cg: float, bath: BathSpec, omega: ArrayLike) -> ArrayLike:
    """
    J(w) = (C+Cg)^2 C_Z^2 R w / [(2Cg(C+2Cg) + (C+Cg)C_Z)^2 + 4Cg^2(C+2Cg)^2 C_Z^2 R^2 w^2]
    in Ohm/s (1/F), w in rad/s.
    """
    w = np.asarray(omega, dtype=float)
    if np.any(w <= 0):
        raise DomainError("Spectral density needs omega > 0")
    num, base, quad = _spectral_parts(C, Cg, bath)
    if num == 0:
        return np.zeros_like(w) if w.ndim else 0.0
    J = num * w / (base ** 2 + quad * w ** 2)
    return J if w.ndim else float(J)


def ohmic_slope(C: float, Cg: float, bath: BathSpec) -> float:
    """lim J(w)/w as w -> 0."""
    num, base, _ = _spectral_parts(C, Cg, bath)
    if num == 0:
        return 0.0
    return num / base ** 2


@dataclass(frozen=True)
class CouplingFactors:
    """Coefficients of Q_r and Q_q in m.Q."""
    resonator: float
    qubit: float
    symmetric: bool
    report: Optional[str] = None


def coupling_vector_mQ(C: float, Cg: float, Cg_b: Optional[float] = None) -> CouplingFactors:
    """
    m.Q for ground capacitances Cg (node a) and Cg_b (node b, default Cg).
    Node charges are Q_a = Q_r + Q_q and Q_b = Q_r - Q_q, each weighted by Cg/(C + Cg).
    """
    Cg_b = Cg if Cg_b is None else Cg_b
    if min(C, Cg, Cg_b) < 0:
        raise DomainError("Capacitances must not be negative", C=C, Cg=Cg, Cg_b=Cg_b)
    fa = Cg / (C + Cg) if C + Cg > 0 else 0.0
    fb = Cg_b / (C + Cg_b) if C + Cg_b > 0 else 0.0
    symmetric = Cg == Cg_b
    report = None
    if not symmetric:
        report = f"asymmetric ground capacitance (dCg = {Cg - Cg_b:.4g} fF) couples the qubit with factor {fa - fb:.4g}"
        logger.warning("dissipation: %s", report)
    return CouplingFactors(resonator=fa + fb, qubit=0.0 if symmetric else fa - fb, symmetric=symmetric, report=report)


def charge_matrix_element_squared(Z0: float) -> float:
    """|<0|Q|1>|^2 = hbar / (2 Z0) for a harmonic mode of impedance Z0 (C^2)."""
    if Z0 <= 0:
        raise DomainError("Impedance must be positive", Z0=Z0)
    return hbar / (2.0 * Z0)


def _coth(x: float) -> float:
    return 1.0 / math.tanh(x)


def decoherence_times(mode: ModeSpectrum, factor: float, J: Union[float, Callable[[float], float]],
                      T: Optional[float] = None, diagonal_difference: float = 0.0,
                      slope: float = 0.0) -> DecoherenceTimes:
    """
    1/T1 = (4/hbar) |<0|m.Q|1>|^2 J(w01) coth(hbar w01 / 2 kB T)
    1/Tphi = (1/hbar) |<0|m.Q|0> - <1|m.Q|1>|^2 (J/(hbar w))|_{w->0} 2 kB T
    diagonal_difference is <0|Q|0> - <1|Q|1> in C (0 for a harmonic mode); slope is J(w)/w at w -> 0.
    """
    T = get_settings().temperature if T is None else T
    if T <= 0:
        raise DomainError("Temperature must be positive", T=T)
    w01 = mode.omega
    if w01 <= 0:
        raise DomainError("Transition frequency must be positive", omega=w01)
    J01 = J(w01) if callable(J) else float(J)
    element = factor ** 2 * charge_matrix_element_squared(mode.Z0)
    rate1 = 4.0 / hbar * element * J01 * _coth(hbar * w01 / (2.0 * kB * T))
    rate_phi = (factor * diagonal_difference) ** 2 / hbar * slope / hbar * 2.0 * kB * T
    T1 = math.inf if rate1 == 0 else 1.0 / rate1
    Tphi = math.inf if rate_phi == 0 else 1.0 / rate_phi
    rate2 = rate1 / 2.0 + rate_phi
    T2 = math.inf if rate2 == 0 else 1.0 / rate2
    return DecoherenceTimes(T1=T1, T2=T2, Tphi=Tphi)


def resonator_mode_with_bath(p: CouplerParams, phi_x: float, Cg: Optional[float] = None) -> ModeSpectrum:
    """
    Resonator mode with C -> C + Cg: w = sqrt((1+eta)/(L(C+Cg))),
    Z = 2 sqrt(L/((1+eta)(C+Cg))).
    """
    Cg = p.Cg if Cg is None else Cg
    h = eta(p.ej_sigma, p.k, p.L, phi_x)
    c, L = (p.C + Cg) * FF, p.L * NH
    omega = math.sqrt((1.0 + h) / (L * c))
    Z = 2.0 * math.sqrt(L / ((1.0 + h) * c))
    return ModeSpectrum(name="resonator", frequency=angular_to_ghz(omega), Z0=Z, phi_zpf=0.0,
                        alpha=0.0, alpha_rel=0.0)


def t1_closed_form(p: CouplerParams, phi_x: float, bath: BathSpec, Cg: Optional[float] = None) -> float:
    """T1 = 1/(4Cg^2) sqrt((C+Cg)^3 L/(1+eta)) tanh(hbar w01/2kB T) / J(w01), seconds."""
    Cg = p.Cg if Cg is None else Cg
    h = eta(p.ej_sigma, p.k, p.L, phi_x)
    c, cg, L = (p.C + Cg) * FF, Cg * FF, p.L * NH
    w01 = math.sqrt((1.0 + h) / (L * c))
    J = spectral_density(p.C, Cg, bath, w01)
    if cg == 0 or J == 0:
        return math.inf
    return (1.0 / (4.0 * cg ** 2) * math.sqrt(c ** 3 * L / (1.0 + h))
            * math.tanh(hbar * w01 / (2.0 * kB * bath.temperature)) / J)


def resonator_decoherence(p: CouplerParams, phi_x: float, bath: BathSpec,
                          Cg: Optional[float] = None) -> DecoherenceTimes:
    """Composed path: m.Q factor, harmonic matrix element and J; T2 = 2 T1 since Tphi diverges."""
    Cg = p.Cg if Cg is None else Cg
    mode = resonator_mode_with_bath(p, phi_x, Cg)
    factors = coupling_vector_mQ(p.C, Cg)
    return decoherence_times(mode, factors.resonator, lambda w: spectral_density(p.C, Cg, bath, w),
                             T=bath.temperature, diagonal_difference=0.0, slope=ohmic_slope(p.C, Cg, bath))


def qubit_decoherence(p: CouplerParams, qubit: ModeSpectrum, bath: BathSpec, Cg_b: Optional[float] = None,
                      diagonal_difference: float = 0.0) -> DecoherenceTimes:
    """Qubit times from its m.Q factor; infinite for a symmetric circuit."""
    factors = coupling_vector_mQ(p.C, p.Cg, Cg_b)
    if factors.qubit == 0:
        return DecoherenceTimes(T1=math.inf, T2=math.inf, Tphi=math.inf)
    return decoherence_times(qubit, factors.qubit, lambda w: spectral_density(p.C, p.Cg, bath, w),
                             T=bath.temperature, diagonal_difference=diagonal_difference,
                             slope=ohmic_slope(p.C, p.Cg, bath))


def kappa_from_bath(p: CouplerParams, phi_x: float, bath: BathSpec, Cg: Optional[float] = None) -> float:
    """Resonator linewidth kappa = zeta (2/pi) J(w_r), zeta = Cg^2/2 sqrt((1+eta)/(L(C+Cg)^3)), in 1/s."""
    Cg = p.Cg if Cg is None else Cg
    h = eta(p.ej_sigma, p.k, p.L, phi_x)
    c, cg, L = (p.C + Cg) * FF, Cg * FF, p.L * NH
    w_r = math.sqrt((1.0 + h) / (L * c))
    zeta = cg ** 2 / 2.0 * math.sqrt((1.0 + h) / (L * c ** 3))
    return zeta * 2.0 / math.pi * spectral_density(p.C, Cg, bath, w_r)


# -----------------------------------------------------------------------------
# Readout
# -----------------------------------------------------------------------------
def _check_kappa(kappa: float) -> None:
    if kappa <= 0:
        raise DomainError("Linewidth must be positive", kappa=kappa)


def _check_state(s: int) -> None:
    if s not in (-1, 1):
        raise DomainError("Qubit state is sigma_z = -1 or +1", qubit_state=s)


def langevin_displacement_static(omega_r: float, g_zx: float, kappa: float, t: ArrayLike,
                                 qubit_state: int = 1, t0: float = 0.0) -> np.ndarray:
    """a(t) = -g/(w_r - i kappa/2) s (1 - exp(-i(w_r - i kappa/2)(t - t0)))."""
    _check_kappa(kappa)
    _check_state(qubit_state)
    z = omega_r - 0.5j * kappa
    tt = np.asarray(t, dtype=float) - t0
    return -g_zx / z * qubit_state * (1.0 - np.exp(-1j * z * tt))


def langevin_displacement_modulated(g_tilde: float, kappa: float, t: ArrayLike, qubit_state: int = 1,
                                    t0: float = 0.0) -> np.ndarray:
    """Rotating frame: a(t) = -(i g_tilde/kappa) s (1 - exp(-kappa (t - t0)/2))."""
    _check_kappa(kappa)
    _check_state(qubit_state)
    tt = np.asarray(t, dtype=float) - t0
    return -1j * g_tilde / kappa * qubit_state * (1.0 - np.exp(-0.5 * kappa * tt))


def static_steady_state(omega_r: float, g_zx: float, kappa: float, qubit_state: int = 1) -> complex:
    return complex(-g_zx * qubit_state / (omega_r - 0.5j * kappa))


def modulated_steady_state(g_tilde: float, kappa: float, qubit_state: int = 1) -> complex:
    return complex(-1j * g_tilde * qubit_state / kappa)


def boost_ratio(omega_r: float, g_zx: float, g_tilde: float, kappa: float) -> float:
    """|modulated steady state| / |static steady state| = (g_tilde/g) |w_r - i kappa/2| / kappa."""
    return abs(modulated_steady_state(g_tilde, kappa)) / abs(static_steady_state(omega_r, g_zx, kappa))


def readout_trace(omega_r: float, g: float, kappa: float, times: Sequence[float], qubit_state: int = 1,
                  modulated: bool = False) -> ReadoutTrace:
    t = np.asarray(times, dtype=float)
    if modulated:
        alpha = langevin_displacement_modulated(g, kappa, t, qubit_state)
        steady = modulated_steady_state(g, kappa, qubit_state)
    else:
        alpha = langevin_displacement_static(omega_r, g, kappa, t, qubit_state)
        steady = static_steady_state(omega_r, g, kappa, qubit_state)
    return ReadoutTrace(times=t, alpha=alpha, steady_state=steady, qubit_state=qubit_state,
                        label="modulated" if modulated else "static",
                        meta={"omega_r": omega_r, "g": g, "kappa": kappa})


def integrate_cavity(omega_r: float, kappa: float, coupling: Callable[[float], float], times: Sequence[float],
                     qubit_state: int = 1, rtol: float = 1e-11, atol: float = 1e-13) -> np.ndarray:
    """
    da/dt = -i(w_r a + g(t) s) - kappa a / 2 from a(0) = 0, integrated numerically.
    Real and imaginary parts are integrated as a real system.
    """
    _check_kappa(kappa)
    _check_state(qubit_state)
    t = np.asarray(times, dtype=float)

    def rhs(tau, y):
        a = y[0] + 1j * y[1]
        da = -1j * (omega_r * a + coupling(tau) * qubit_state) - 0.5 * kappa * a
        return [da.real, da.imag]

    sol = solve_ivp(rhs, (0.0, float(t[-1])), [0.0, 0.0], method="DOP853", t_eval=t, rtol=rtol, atol=atol)
    if not sol.success:
        raise DomainError(f"Cavity integration failed: {sol.message}")
    return sol.y[0] + 1j * sol.y[1]


def integrate_modulated_lab_frame(omega_r: float, g_bar: float, g_tilde: float, kappa: float,
                                  times: Sequence[float], qubit_state: int = 1) -> np.ndarray:
    """Lab-frame integration with g(t) = g_bar + g_tilde cos(w_r t), rotated back by exp(i w_r t)."""
    t = np.asarray(times, dtype=float)
    a = integrate_cavity(omega_r, kappa, lambda tau: g_bar + g_tilde * math.cos(omega_r * tau), t, qubit_state)
    return a * np.exp(1j * omega_r * t)


@dataclass(frozen=True)
class ReadoutSummary:
    static: Dict[int, complex]
    modulated: Dict[int, complex]
    separation_static: float
    separation_modulated: float
    boost: float
    notes: List[str] = field(default_factory=list)


def readout_summary(omega_r: float, g_zx: float, g_tilde: float, kappa: float) -> ReadoutSummary:
    static = {s: static_steady_state(omega_r, g_zx, kappa, s) for s in (-1, 1)}
    modulated = {s: modulated_steady_state(g_tilde, kappa, s) for s in (-1, 1)}
    notes = []
    if kappa / omega_r > 1e-2:
        notes.append("kappa/omega_r above 1e-2; the rotating-wave form of the modulated response is approximate")
    return ReadoutSummary(
        static=static, modulated=modulated,
        separation_static=abs(static[1] - static[-1]), separation_modulated=abs(modulated[1] - modulated[-1]),
        boost=boost_ratio(omega_r, g_zx, g_tilde, kappa), notes=notes,
    )
