# src/examples/coupler/cases.py
"""
The three reference designs: a single coupling junction per branch (k1), arrays
of nine junctions (kn), and five-junction arrays behind an added series
inductance (add). Energies in GHz, capacitances in fF, inductances in nH.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Dict, Tuple

from src.core.circuits import coupler_netlist
from src.core.errors import ConfigurationError
from src.core.models import CouplerParams, TableTarget

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CouplerCase:
    name: str
    description: str
    params: CouplerParams
    targets: Tuple[TableTarget, ...] = ()

    def netlist(self, params: CouplerParams) -> str:
        return coupler_netlist(params, title=f"{self.name}: {self.description}")

    def with_params(self, params: CouplerParams) -> "CouplerCase":
        return replace(self, params=params)


def _couplings(g_zx, g_xx, g_zz, g_xz) -> Tuple[TableTarget, ...]:
    return (
        TableTarget("g_zx_max", "max |g_zx|/2pi", "MHz", value=g_zx[0], tol=g_zx[1]),
        TableTarget("g_xx_max", "max |g_xx|/2pi", "MHz", value=g_xx[0], tol=g_xx[1]),
        TableTarget("g_zz_max", "max |g_zz|/2pi", "MHz", value=g_zz[0], tol=g_zz[1]),
        TableTarget("g_xz_max", "max |g_xz|/2pi", "MHz", value=g_xz[0], tol=g_xz[1]),
    )


K1 = CouplerCase(
    name="k1",
    description="single coupling junction per branch",
    params=CouplerParams(ej_q=10.0, ej_sigma=20.0, d=0.08, C=114.0, Cq=70.0, L=4.5, k=1),
    targets=_couplings((53.0, 2.0), (49.0, 2.0), (5.0, 1.0), (6.0, 1.0)) + (
        TableTarget("omega_r_min", "omega_r/2pi lower band edge", "GHz", value=6.2, tol=0.3),
        TableTarget("omega_r_max", "omega_r/2pi upper band edge", "GHz", value=8.0, tol=0.3),
        TableTarget("Delta_min", "Delta/2pi lower edge", "GHz", value=5.4, tol=0.2),
        TableTarget("Delta_max", "Delta/2pi upper edge", "GHz", value=6.4, tol=0.2),
        TableTarget("alpha_rel_q_min", "|alpha_rel| qubit, lower", "%", value=0.8, tol=0.15),
        TableTarget("alpha_rel_q_max", "|alpha_rel| qubit, upper", "%", value=1.1, tol=0.15),
        TableTarget("alpha_rel_r_max", "|alpha_rel| resonator", "%", hi=0.6),
        TableTarget("L_max", "L_max", "nH", value=4.9, tol=0.1),
        TableTarget("L_crit", "L_crit", "nH", value=5.6, tol=0.1),
        TableTarget("boost", "g_zx boost at phi_Xb = pi", "", lo=1.7, hi=2.3),
        TableTarget("Delta_pi", "Delta/2pi at phi_Xb = pi", "GHz", lo=2.3, hi=4.2),
    ),
)

KN = CouplerCase(
    name="kn",
    description="coupling junction arrays, k = 9",
    params=CouplerParams(ej_q=10.0, ej_sigma=160.0, d=0.02, C=102.0, Cq=60.0, L=5.0, k=9),
    targets=_couplings((6.0, 0.5), (13.0, 1.0), (0.07, 0.02), (0.2, 0.05)) + (
        TableTarget("alpha_rel_r_max", "|alpha_rel| resonator", "%", hi=0.01),
    ),
)

ADD = CouplerCase(
    name="add",
    description="arrays behind an added series inductance, k = 5",
    params=CouplerParams(ej_q=5.0, ej_sigma=155.0, d=0.02, C=65.0, Cq=50.0, L=4.5, k=5, La=3.0),
    targets=_couplings((10.0, 1.0), (9.0, 1.0), (0.06, 0.02), (0.5, 0.15)) + (
        TableTarget("k_crit", "k_crit", "", value=3.3, tol=0.2),
        TableTarget("alpha_rel_r_max", "|alpha_rel| resonator", "%", hi=0.005),
        TableTarget("boost", "g_zx boost at phi_Xb = pi", "", lo=1.7, hi=2.3),
    ),
)

CASES: Dict[str, CouplerCase] = {c.name: c for c in (K1, KN, ADD)}


def get_case(name: str) -> CouplerCase:
    try:
        return CASES[name]
    except KeyError:
        raise ConfigurationError(f"Unknown case {name!r}", allowed=sorted(CASES)) from None
