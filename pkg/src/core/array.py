# src/core/array.py
"""
Junction arrays as effective branches.

An array of k junctions with no trapped flux quanta contributes
-k E_J cos((phi + phi_x) / k). With a series inductance La in front of the
shunted array, the internal phase phi_d has no capacitance and follows the
branch phase phi through

    phi(phi_d) = gamma phi_d + beta sin((phi_d + phi_x) / k),

with beta = La E_J / (Phi0/2pi)^2 and gamma = 1 + La / L. The branch energy is
(Phi0/2pi)^2 / (2 La) * f at the stationary phi_d, where

    f = phi^2 - 2 phi phi_d + gamma phi_d^2 - 2 k beta cos((phi_d + phi_x) / k).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from scipy.optimize import brentq

from .errors import MultivaluedPotentialError
from .settings import get_settings
from .units import FLUX_ENERGY, charging_energy

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ArrayBranch:
    k: int
    # Josephson energy per junction (GHz)
    ej_each: float
    # shunt inductance (nH)
    L: float
    # series inductance (nH)
    La: float

    @property
    def beta(self) -> float:
        return self.La * self.ej_each / FLUX_ENERGY

    @property
    def gamma(self) -> float:
        return 1.0 + self.La / self.L

    @property
    def critical_ratio(self) -> float:
        """k gamma / beta; the branch is single-valued iff this exceeds 1."""
        return math.inf if self.beta == 0 else self.k * self.gamma / self.beta

    @property
    def is_invertible(self) -> bool:
        return self.critical_ratio > 1.0

    def require_invertible(self) -> None:
        if not self.is_invertible:
            raise MultivaluedPotentialError(
                "k*gamma/beta <= 1: the branch potential is multi-valued",
                k=self.k, beta=self.beta, gamma=self.gamma, ratio=self.critical_ratio,
            )


def array_effective_potential(k: int, ej_each: float, phi: float, phi_x: float = 0.0) -> float:
    """-k E_J cos((phi + phi_x)/k), winding number pinned to zero."""
    return -k * ej_each * math.cos((phi + phi_x) / k)


def effective_array_inductance(k: int, ej_each: float) -> float:
    """Small-phase inductance of the array in nH: k (Phi0/2pi)^2 / E_J."""
    return k * FLUX_ENERGY / ej_each


def _forward(ab: ArrayBranch, phi_d: float, phi_x: float) -> float:
    return ab.gamma * phi_d + ab.beta * math.sin((phi_d + phi_x) / ab.k)


def invert_branch(ab: ArrayBranch, phi: float, phi_x: float = 0.0) -> float:
    """The unique phi_d with phi(phi_d) = phi."""
    ab.require_invertible()
    if ab.beta == 0:
        return phi / ab.gamma
    lo = (phi - ab.beta) / ab.gamma
    hi = (phi + ab.beta) / ab.gamma
    root = brentq(lambda d: _forward(ab, d, phi_x) - phi, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps,
                  maxiter=200)
    # one Newton polish on the monotone map
    slope = ab.gamma + ab.beta / ab.k * math.cos((root + phi_x) / ab.k)
    polished = root - (_forward(ab, root, phi_x) - phi) / slope
    if lo <= polished <= hi and abs(_forward(ab, polished, phi_x) - phi) <= abs(_forward(ab, root, phi_x) - phi):
        root = polished
    return root


def stationarity_residual(ab: ArrayBranch, phi: float, phi_d: float, phi_x: float = 0.0) -> float:
    """d f / d phi_d; vanishes when phi_d is the internal phase of the branch."""
    return -2.0 * phi + 2.0 * ab.gamma * phi_d + 2.0 * ab.beta * math.sin((phi_d + phi_x) / ab.k)


@dataclass(frozen=True)
class BranchPotential:
    ab: ArrayBranch
    phi_x: float = 0.0

    @property
    def scale(self) -> float:
        """(Phi0/2pi)^2 / (2 La) in GHz."""
        return FLUX_ENERGY / (2.0 * self.ab.La)

    def f(self, phi: float) -> float:
        ab = self.ab
        d = invert_branch(ab, phi, self.phi_x)
        return phi * phi - 2.0 * phi * d + ab.gamma * d * d - 2.0 * ab.k * ab.beta * math.cos((d + self.phi_x) / ab.k)

    def dphi_d(self, phi: float) -> float:
        ab = self.ab
        d = invert_branch(ab, phi, self.phi_x)
        return 1.0 / (ab.gamma + ab.beta / ab.k * math.cos((d + self.phi_x) / ab.k))

    def derivatives(self, phi: float) -> np.ndarray:
        """Branch energy and its first four derivatives in phi (GHz / rad^n)."""
        ab = self.ab
        k, beta = ab.k, ab.beta
        d = invert_branch(ab, phi, self.phi_x)
        w = (d + self.phi_x) / k
        s, c = math.sin(w), math.cos(w)
        D = ab.gamma + beta / k * c
        d1 = 1.0 / D
        d2 = beta / k ** 2 * s / D ** 3
        d3 = beta / k ** 3 * c / D ** 4 + 3.0 * (beta / k ** 2) ** 2 * s * s / D ** 5
        f0 = phi * phi - 2.0 * phi * d + ab.gamma * d * d - 2.0 * k * beta * c
        raw = np.array([f0, 2.0 * (phi - d), 2.0 * (1.0 - d1), -2.0 * d2, -2.0 * d3])
        return self.scale * raw

    def energy(self, phi: float) -> float:
        return float(self.derivatives(phi)[0])


def branch_potential(ab: ArrayBranch, phi_x: float = 0.0) -> BranchPotential:
    ab.require_invertible()
    return BranchPotential(ab, phi_x)


def array_guard_report(ej_each: float, k: int, Cj: Optional[float] = None, label: str = "array") -> List[str]:
    """
    Phase-slip and plasma-mode guards for a junction array. Returns human-readable
    warnings; an empty list means every guard holds.
    """
    settings = get_settings()
    warnings: List[str] = []
    if k > 1 and ej_each < settings.array_min_ej:
        warnings.append(f"{label}: E_J per junction {ej_each:.4g} GHz below {settings.array_min_ej:g} GHz")
    if Cj:
        ec = charging_energy(Cj)
        if ej_each / ec < settings.array_min_ej_ec:
            warnings.append(f"{label}: E_J/E_C = {ej_each / ec:.4g} below {settings.array_min_ej_ec:g}")
        plasma = math.sqrt(8.0 * ej_each * ec)
        if plasma < settings.array_min_plasma:
            warnings.append(f"{label}: plasma frequency {plasma:.4g} GHz below {settings.array_min_plasma:g} GHz")
    return warnings


def validate_array_guards(branch) -> List[str]:
    """Guards for a parsed netlist array branch."""
    return array_guard_report(branch.ej_each, branch.k, branch.Cj, label=branch.name)
