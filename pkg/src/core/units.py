# src/core/units.py
#
# Canonical units used everywhere in the package:
#   energy       GHz   (E/h)
#   capacitance  fF
#   inductance   nH
#   flux         fraction of the flux quantum
#   phase        rad
#   frequency    GHz   (omega / 2pi)
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict

import scipy.constants as sc

from .errors import ConfigurationError, DomainError


@dataclass(frozen=True)
class Constants:
    # Planck constant (J s)
    h: float = sc.h
    # elementary charge (C)
    e_charge: float = sc.e
    # Boltzmann constant (J/K)
    kB: float = sc.k

    @property
    def hbar(self) -> float:
        return self.h / (2.0 * math.pi)

    @property
    def Phi0(self) -> float:
        return self.h / (2.0 * self.e_charge)


CONSTANTS = Constants()

h = CONSTANTS.h
hbar = CONSTANTS.hbar
e_charge = CONSTANTS.e_charge
kB = CONSTANTS.kB
Phi0 = CONSTANTS.Phi0

# (Phi0/2pi)^2 / h in GHz*nH: inductive energy of 1 nH is FLUX_ENERGY / 1 GHz.
FLUX_ENERGY = (Phi0 / (2.0 * math.pi)) ** 2 / h
# e^2 / (2h) in GHz*fF: charging energy of 1 fF.
CHARGE_ENERGY = e_charge ** 2 / (2.0 * h) * 1e6
# hbar / (2 e^2) in Ohm, links zero-point phase and impedance.
IMPEDANCE_UNIT = hbar / (2.0 * e_charge ** 2)

# SI value times factor gives the canonical value.
_TO_CANONICAL: Dict[str, float] = {
    "energy": 1.0 / (h * 1e9),
    "capacitance": 1e15,
    "inductance": 1e9,
    "flux": 1.0 / Phi0,
    "frequency": 1.0 / (2.0 * math.pi * 1e9),
}

UNIT_KINDS = tuple(_TO_CANONICAL)


def _factor(kind: str) -> float:
    try:
        return _TO_CANONICAL[kind]
    except KeyError:
        raise ConfigurationError(f"Unknown unit kind: {kind!r}", allowed=list(UNIT_KINDS)) from None


def to_canonical(value: float, kind: str) -> float:
    """
    Convert an SI quantity into the canonical unit for kind.
    frequency expects an angular frequency in rad/s and returns omega/2pi in GHz.
    """
    return value * _factor(kind)


def from_canonical(value: float, kind: str) -> float:
    return value / _factor(kind)


def inductive_energy(L: float) -> float:
    """E_L = (Phi0/2pi)^2 / (2L) in GHz for L in nH."""
    if L <= 0:
        raise DomainError("Inductance must be positive", L=L)
    if math.isinf(L):
        return 0.0
    return FLUX_ENERGY / (2.0 * L)


def charging_energy(C_total: float) -> float:
    """E_C = e^2 / (2C) in GHz for C in fF."""
    if C_total <= 0:
        raise DomainError("Capacitance must be positive", C=C_total)
    if math.isinf(C_total):
        return 0.0
    return CHARGE_ENERGY / C_total


def ghz_to_angular(f_ghz: float) -> float:
    """GHz (omega/2pi) to rad/s."""
    return 2.0 * math.pi * 1e9 * f_ghz


def angular_to_ghz(omega: float) -> float:
    return omega / (2.0 * math.pi * 1e9)


def flux_to_phase(flux: float) -> float:
    """Phi/Phi0 to 2pi Phi/Phi0."""
    return 2.0 * math.pi * flux


def phase_to_flux(phase: float) -> float:
    return phase / (2.0 * math.pi)
