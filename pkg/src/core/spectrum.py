# src/core/spectrum.py
"""
Mode frequencies, anharmonicities and qubit-resonator couplings.

Two routes give the same quantities. The closed forms expand the two-branch
coupler around phi = 0; the numeric route finds the flux-dependent potential
minimum, expands the model there to fourth order and second-quantizes each
variable with the others held at the minimum.

Frequencies are omega/2pi in GHz, couplings g/2pi in GHz, phases in radians,
flux maps in units of Phi0.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Dict, Mapping, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from scipy.optimize import brentq

from .array import ArrayBranch, BranchPotential
from .errors import DomainError, DoubleWellError, MultivaluedPotentialError
from .lagrangian import EnergyModel, legendre_transform
from .models import CouplerParams, CouplingSet, DesignLimits, ModeSpectrum, OperatingPoint
from .settings import get_settings
from .units import CHARGE_ENERGY, FLUX_ENERGY, IMPEDANCE_UNIT, e_charge, hbar, inductive_energy

logger = logging.getLogger(__name__)

CLOSED_FORM = "closed_form"
NUMERIC = "numeric_minimum"


# -----------------------------------------------------------------------------
# Closed forms
# -----------------------------------------------------------------------------
def eta(ej_sigma: float, k: float, L: float, phi_x: float) -> float:
    """Flux coefficient (E_JSigma / 2k)(2pi/Phi0)^2 L cos(phi_x / k)."""
    if L <= 0 or k < 1:
        raise DomainError("eta needs L > 0 and k >= 1", L=L, k=k)
    return ej_sigma * L / (2.0 * k * FLUX_ENERGY) * math.cos(phi_x / k)


def _check_eta(value: float) -> None:
    if abs(value) >= 1.0:
        raise DomainError(f"|eta| = {abs(value):.4g} >= 1, the expansion around phi = 0 breaks down", eta=value)


def qubit_charging_energy(p: CouplerParams) -> float:
    """E_C of the qubit variable, e^2 / (2C_q + C) in GHz."""
    return 2.0 * CHARGE_ENERGY / (2.0 * p.Cq + p.C)


def resonator_charging_energy(p: CouplerParams) -> float:
    return 2.0 * CHARGE_ENERGY / p.C


def _zpf(E_C: float, stiffness: float) -> float:
    return (2.0 * E_C / stiffness) ** 0.25


def _qubit_stiffness(p: CouplerParams, eta_value: float, phi_Xb: float) -> float:
    sign = _bias_sign(phi_Xb)
    stiffness = inductive_energy(p.L) * (1.0 + eta_value) + sign * p.ej_q
    if stiffness <= 0:
        raise DoubleWellError(
            "Qubit curvature is not positive at phi = 0; the potential is a double well",
            stiffness=stiffness, L=p.L, ej_q=p.ej_q,
        )
    return stiffness


def _bias_sign(phi_Xb: float) -> int:
    if math.isclose(phi_Xb % (2.0 * math.pi), 0.0, abs_tol=1e-12) or math.isclose(
            phi_Xb % (2.0 * math.pi), 2.0 * math.pi, abs_tol=1e-12):
        return 1
    if math.isclose(phi_Xb % (2.0 * math.pi), math.pi, abs_tol=1e-12):
        return -1
    raise DomainError("Closed forms cover phi_Xb = 0 and pi only", phi_Xb=phi_Xb)


def qubit_spectrum_closed_form(p: CouplerParams, phi_x: float, phi_Xb: float = 0.0) -> ModeSpectrum:
    """
    Inductively shunted qubit at phi = 0. For phi_Xb = pi the qubit junction
    enters with opposite sign and the anharmonicity may turn positive.
    """
    h = eta(p.ej_sigma, p.k, p.L, phi_x)
    _check_eta(h)
    sign = _bias_sign(phi_Xb)
    E_C = qubit_charging_energy(p)
    stiffness = _qubit_stiffness(p, h, phi_Xb)
    freq = math.sqrt(8.0 * E_C * stiffness)
    # quartic coefficient of the qubit variable
    quartic = -(sign * p.ej_q + FLUX_ENERGY * h / (8.0 * p.k ** 2 * p.L))
    alpha = E_C * quartic / stiffness
    zpf = _zpf(E_C, stiffness)
    return ModeSpectrum(
        name="qubit", frequency=freq, Z0=zpf ** 2 * IMPEDANCE_UNIT, phi_zpf=zpf, alpha=alpha,
        alpha_rel=alpha / (freq + alpha), E_C=E_C, stiffness=stiffness, Delta=freq + alpha,
    )


def resonator_relative_anharmonicity(p: CouplerParams, eta_value: float) -> float:
    """eta e^2 / (eta e^2 - 4 hbar k^2 (1 + eta)^(3/2) sqrt(C/L)), SI inside."""
    C = p.C * 1e-15
    L = p.L * 1e-9
    num = eta_value * e_charge ** 2
    return num / (num - 4.0 * hbar * p.k ** 2 * (1.0 + eta_value) ** 1.5 * math.sqrt(C / L))


def resonator_spectrum_closed_form(p: CouplerParams, phi_x: float) -> ModeSpectrum:
    h = eta(p.ej_sigma, p.k, p.L, phi_x)
    _check_eta(h)
    E_C = resonator_charging_energy(p)
    stiffness = inductive_energy(p.L) * (1.0 + h)
    freq = math.sqrt(8.0 * E_C * stiffness)
    alpha = -h * E_C / (4.0 * p.k ** 2 * (1.0 + h))
    zpf = _zpf(E_C, stiffness)
    return ModeSpectrum(
        name="resonator", frequency=freq, Z0=zpf ** 2 * IMPEDANCE_UNIT, phi_zpf=zpf, alpha=alpha,
        alpha_rel=resonator_relative_anharmonicity(p, h), E_C=E_C, stiffness=stiffness,
    )


def couplings_closed_form(p: CouplerParams, phi_x: float, phi_Xb: float = 0.0) -> CouplingSet:
    """
    The four parity-classified couplings of the two coupling branches, with
    zero-point amplitudes of the uncoupled modes at phi = 0.
    """
    q = qubit_spectrum_closed_form(p, phi_x, phi_Xb)
    r = resonator_spectrum_closed_form(p, phi_x)
    zq, zr = q.phi_zpf, r.phi_zpf
    k = p.k
    s, c = math.sin(phi_x / k), math.cos(phi_x / k)
    # Taylor coefficients of q r, q^2 r, q r^2 and q^2 r^2 (per-junction energies)
    c11 = p.ej_delta * c / (4.0 * k)
    c21 = -p.ej_sigma * s / (16.0 * k ** 2)
    c12 = -p.ej_delta * s / (16.0 * k ** 2)
    c22 = -p.ej_sigma * c / (64.0 * k ** 3)
    g_zx = c21 * zq ** 2 * zr
    g_zz = c22 * zq ** 2 * zr ** 2
    return CouplingSet(
        g_xx=c11 * zq * zr, g_zx=g_zx, g_xz=c12 * zq * zr ** 2, g_zz=g_zz, method=CLOSED_FORM,
        resonator_drive=2.0 * g_zx, resonator_shift=2.0 * g_zz,
    )


def asymmetric_transverse(p: CouplerParams, delta_L: float, d: float,
                          phi_x: float) -> Tuple[float, Optional[float]]:
    """
    Transverse coupling with unequal inductors L(1 -+ delta_L) and junction
    asymmetry d, and the flux in [0, k pi] where it vanishes (None if it never does).
    """
    p = p.with_overrides({"delta_L": delta_L, "d": d})
    q = qubit_spectrum_closed_form(p, phi_x)
    r = resonator_spectrum_closed_form(p, phi_x)
    zz = q.phi_zpf * r.phi_zpf
    g_asym = FLUX_ENERGY * (p.L2 - p.L1) / (4.0 * p.L1 * p.L2) * zz
    g_sym = p.ej_delta / (4.0 * p.k) * zz
    total = g_asym + g_sym * math.cos(phi_x / p.k)
    return total, transverse_zero_crossing(p.ej_sigma, p.k, p.L1, p.L2, d)


def transverse_zero_crossing(ej_sigma: float, k: int, L1: float, L2: float, d: float) -> Optional[float]:
    """
    cos(phi_x / k) = -(delta_L / d) 4 k (Phi0/2pi)^2 / (E_JSigma (L1 + L2)), with
    delta_L = (L2 - L1)/(L1 + L2). Invariant under joint scaling of delta_L and d.
    """
    if d == 0:
        return None
    delta_L = (L2 - L1) / (L1 + L2)
    ratio = -(delta_L / d) * 4.0 * k * FLUX_ENERGY / (ej_sigma * (L1 + L2))
    if abs(ratio) >= 1.0:
        logger.debug("asymmetry: |g_asym| >= |g_sym|, no zero crossing (ratio %.4g)", ratio)
        return None
    return k * math.acos(ratio)


# -----------------------------------------------------------------------------
# Design limits
# -----------------------------------------------------------------------------
def qubit_curvature_adapted(p: CouplerParams, k: float, phi_Xb: float = math.pi) -> float:
    """Qubit curvature (GHz) at phi = 0, phi_x = k pi for the added-inductance circuit."""
    ab = ArrayBranch(k=k, ej_each=0.5 * p.ej_sigma, L=p.L, La=p.La)
    if not ab.is_invertible:
        raise MultivaluedPotentialError("k*gamma/beta <= 1", k=k, ratio=ab.critical_ratio)
    branch = BranchPotential(ab, phi_x=k * math.pi).derivatives(0.0)[2]
    # each branch phase is (phi_r +- phi_q)/2
    return 2.0 * 0.25 * branch + _bias_sign(phi_Xb) * p.ej_q


def design_limits(p: CouplerParams, band: Optional[Tuple[float, float]] = None) -> DesignLimits:
    """
    L_max is the largest L whose resonator tuning range fits in the band, L_crit keeps
    the qubit single-welled at phi_Xb = pi, k_crit is the smallest array count
    with positive qubit curvature there (added-inductance circuits only).
    """
    band = band or get_settings().resonator_band
    eta0 = eta(p.ej_sigma, p.k, p.L, 0.0)
    E_C = qubit_charging_energy(p)
    EJq_star = p.ej_q + inductive_energy(p.L) * (1.0 + eta0)

    # C is chosen so that omega_r(0) sits on the band top; omega_r(k pi) must stay on or above
    # the floor, i.e. (1 - |eta|)/(1 + |eta|) >= (lo/hi)^2, independent of C
    f_lo, f_hi = band
    eta_max = (f_hi ** 2 - f_lo ** 2) / (f_hi ** 2 + f_lo ** 2)
    L_max = eta_max * 2.0 * p.k * FLUX_ENERGY / p.ej_sigma if p.ej_sigma > 0 else math.inf

    # E_L(1 + eta(L)) = E_Jq at eta = -|eta_0|
    L_crit = FLUX_ENERGY / (2.0 * (p.ej_q + p.ej_sigma / (4.0 * p.k)))

    k_crit = None
    if p.has_added_inductance:
        beta = p.La * 0.5 * p.ej_sigma / FLUX_ENERGY
        gamma = 1.0 + p.La / p.L
        k_floor = beta / gamma * (1.0 + 1e-9)
        k_top = 1e4
        try:
            if qubit_curvature_adapted(p, k_top) < 0:
                k_crit = math.inf
            else:
                k_crit = brentq(lambda k: qubit_curvature_adapted(p, k), max(k_floor, 1.0), k_top, xtol=1e-10)
        except ValueError:
            # curvature already positive at the smallest admissible k
            k_crit = max(k_floor, 1.0)
    limits = DesignLimits(eta=eta0, EJq_star=EJq_star, E_C=E_C, L_max=L_max, L_crit=L_crit, k_crit=k_crit)
    logger.debug("limits: %s", limits)
    return limits


# -----------------------------------------------------------------------------
# Numeric pipeline
# -----------------------------------------------------------------------------
def _positive_definite(H: np.ndarray) -> bool:
    margin = get_settings().pd_margin
    try:
        scipy.linalg.cholesky(H)
    except np.linalg.LinAlgError:
        return False
    eig = np.linalg.eigvalsh(H)
    return bool(eig.min() > margin * eig.max())


def find_minimum(model: EnergyModel, flux_map: Optional[Mapping[str, float]] = None,
                 start: Optional[Sequence[float]] = None) -> OperatingPoint:
    """
    Damped Newton from start (or 0) with an Armijo backtracking line search;
    steepest descent while the Hessian is indefinite.
    """
    settings = get_settings()
    flux_map = dict(flux_map or {})
    theta = np.zeros(model.dim) if start is None else np.array(start, dtype=float)
    U, g, H = model.derivatives(theta, flux_map, order=2)
    iterations = 0
    for iterations in range(1, settings.newton_max_iter + 1):
        if np.linalg.norm(g) < settings.gradient_tol:
            break
        if _positive_definite(H):
            step = -scipy.linalg.cho_solve(scipy.linalg.cho_factor(H), g)
        else:
            step = -g / max(np.abs(np.linalg.eigvalsh(H)).max(), 1e-12)
        slope = float(g @ step)
        t = 1.0
        while t > 1e-12:
            trial = theta + t * step
            U_trial = model.potential(trial, flux_map)
            if U_trial <= U + 1e-4 * t * slope or abs(U_trial - U) <= 1e-15 * max(1.0, abs(U)):
                break
            t *= 0.5
        theta = theta + t * step
        U, g, H = model.derivatives(theta, flux_map, order=2)
    grad_norm = float(np.linalg.norm(g))
    if grad_norm >= settings.gradient_tol:
        raise DomainError(f"Minimum search did not converge (|grad U| = {grad_norm:.3g} GHz/rad)",
                          flux_map=flux_map, gradient_norm=grad_norm)
    well_ok = _positive_definite(H)
    if not well_ok:
        raise DoubleWellError("Stationary point is not a minimum; the potential is not single-welled",
                              flux_map=flux_map, eigenvalues=[float(x) for x in np.linalg.eigvalsh(H)])
    return OperatingPoint(flux_map=flux_map, phi_min=theta, hessian=H, well_ok=well_ok,
                          gradient_norm=grad_norm, iterations=iterations)


def spectrum_numeric(model: EnergyModel, op: OperatingPoint, qubit: Optional[str] = None,
                     resonator: Optional[str] = None) -> Tuple[Dict[str, ModeSpectrum], CouplingSet]:
    """Fourth-order expansion at the minimum; every variable becomes one mode."""
    if not op.well_ok:
        raise DoubleWellError("Operating point is not a single-well minimum")
    qubit = qubit or model.variables[0]
    resonator = resonator or (model.variables[1] if model.dim > 1 else None)
    _, _, H, T3, T4 = model.derivatives(op.phi_min, op.flux_map, order=4)
    form = legendre_transform(model)

    modes: Dict[str, ModeSpectrum] = {}
    for m, name in enumerate(model.variables):
        E_C = float(form.charging_matrix[m, m])
        stiffness = float(H[m, m])
        if stiffness <= 0:
            raise DoubleWellError(f"Variable {name} has no restoring force at the minimum", stiffness=stiffness)
        freq = math.sqrt(8.0 * E_C * stiffness)
        zpf = _zpf(E_C, stiffness)
        alpha = 0.5 * float(T4[m, m, m, m]) * zpf ** 4
        modes[name] = ModeSpectrum(
            name=name, frequency=freq, Z0=zpf ** 2 * IMPEDANCE_UNIT, phi_zpf=zpf, alpha=alpha,
            alpha_rel=alpha / (freq + alpha), E_C=E_C, stiffness=stiffness,
            Delta=freq + alpha if name == qubit else None,
        )
    if resonator is None:
        return modes, CouplingSet(0.0, 0.0, 0.0, 0.0, NUMERIC)

    iq, ir = model.index(qubit), model.index(resonator)
    zq, zr = modes[qubit].phi_zpf, modes[resonator].phi_zpf
    g_zx = 0.5 * float(T3[iq, iq, ir]) * zq ** 2 * zr
    g_zz = 0.25 * float(T4[iq, iq, ir, ir]) * zq ** 2 * zr ** 2
    couplings = CouplingSet(
        g_xx=float(H[iq, ir]) * zq * zr,
        g_zx=g_zx,
        g_xz=0.5 * float(T3[iq, ir, ir]) * zq * zr ** 2,
        g_zz=g_zz,
        method=NUMERIC,
        resonator_drive=2.0 * g_zx,
        resonator_shift=2.0 * g_zz,
    )
    kinetic = float(form.cinv[iq, ir])
    if abs(kinetic) > 1e-12 * abs(form.cinv).max():
        logger.debug("spectrum: kinetic cross term C^-1_qr = %.4g 1/fF is not part of the coupling set", kinetic)
    return modes, couplings


def normal_mode_frequencies(model: EnergyModel, op: OperatingPoint) -> np.ndarray:
    """Harmonic normal modes from H v = lambda C v, ascending, GHz."""
    lam = scipy.linalg.eigh(op.hessian, model.cmat, eigvals_only=True)
    if lam.min() <= 0:
        raise DoubleWellError("Non-positive normal-mode stiffness", eigenvalues=[float(x) for x in lam])
    return np.sqrt(8.0 * CHARGE_ENERGY * lam)


@dataclass(frozen=True)
class PointAnalysis:
    op: OperatingPoint
    modes: Dict[str, ModeSpectrum]
    couplings: CouplingSet


def analyze_point(model: EnergyModel, flux_map: Optional[Mapping[str, float]] = None,
                  qubit: Optional[str] = None, resonator: Optional[str] = None,
                  start: Optional[Sequence[float]] = None) -> PointAnalysis:
    op = find_minimum(model, flux_map, start)
    modes, couplings = spectrum_numeric(model, op, qubit, resonator)
    return PointAnalysis(op, modes, couplings)
