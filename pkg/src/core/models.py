from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Dict, Mapping, Optional, Tuple

import numpy as np

from .errors import ConfigurationError
from .units import ghz_to_angular


@dataclass(frozen=True)
class CouplerParams:
    """
    Lumped parameters of one qubit-resonator block.
    Energies in GHz, capacitances in fF, inductances in nH.
    ej_sigma and d describe the two coupling branches: E_J1 + E_J2 and (E_J1 - E_J2)/(E_J1 + E_J2),
    per junction of the array when k > 1.
    """
    ej_q: float
    ej_sigma: float
    d: float
    C: float
    Cq: float
    L: float
    k: int = 1
    # series inductance in each coupling branch; 0 means the plain circuit
    La: float = 0.0
    # relative inductance asymmetry, L1 = L(1 - delta_L), L2 = L(1 + delta_L)
    delta_L: float = 0.0
    # ground capacitance of each qubit node (bath coupling and multi-block circuits)
    Cg: float = 0.0

    @property
    def ej_delta(self) -> float:
        return self.d * self.ej_sigma

    @property
    def ej1(self) -> float:
        return 0.5 * (self.ej_sigma + self.ej_delta)

    @property
    def ej2(self) -> float:
        return 0.5 * (self.ej_sigma - self.ej_delta)

    @property
    def L1(self) -> float:
        return self.L * (1.0 - self.delta_L)

    @property
    def L2(self) -> float:
        return self.L * (1.0 + self.delta_L)

    @property
    def has_added_inductance(self) -> bool:
        return self.La > 0

    def with_overrides(self, overrides: Mapping[str, float]) -> "CouplerParams":
        allowed = {f for f in self.__dataclass_fields__}
        unknown = sorted(set(overrides) - allowed)
        if unknown:
            raise ConfigurationError(f"Unknown parameter(s): {', '.join(unknown)}", allowed=sorted(allowed))
        cast = {name: (int(round(v)) if name == "k" else float(v)) for name, v in overrides.items()}
        return replace(self, **cast)

    def as_dict(self) -> Dict[str, float]:
        return asdict(self)


@dataclass(frozen=True)
class ModeSpectrum:
    """One second-quantized mode. Frequencies are omega/2pi in GHz."""
    name: str
    frequency: float
    Z0: float
    phi_zpf: float
    alpha: float
    alpha_rel: float
    E_C: float = 0.0
    stiffness: float = 0.0
    # qubit only: omega + alpha
    Delta: Optional[float] = None

    @property
    def omega(self) -> float:
        """Angular frequency in rad/s."""
        return ghz_to_angular(self.frequency)

    @property
    def alpha_angular(self) -> float:
        return ghz_to_angular(self.alpha)

    def as_dict(self) -> Dict[str, Any]:
        return asdict(self)


# (qubit parity, resonator parity) of each coupling term
COUPLING_PARITY: Dict[str, Tuple[str, str]] = {
    "g_xx": ("odd", "odd"),
    "g_zx": ("even", "odd"),
    "g_xz": ("odd", "even"),
    "g_zz": ("even", "even"),
}


@dataclass(frozen=True)
class CouplingSet:
    """Coupling strengths g/2pi in GHz; method is closed_form or numeric_minimum."""
    g_xx: float
    g_zx: float
    g_xz: float
    g_zz: float
    method: str
    # identity parts of the even-power qubit terms, reported instead of mapped onto sigma_z
    resonator_drive: float = 0.0
    resonator_shift: float = 0.0

    @property
    def parity(self) -> Dict[str, Tuple[str, str]]:
        return dict(COUPLING_PARITY)

    def as_mhz(self) -> Dict[str, float]:
        return {name: 1e3 * getattr(self, name) for name in COUPLING_PARITY}

    def as_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class OperatingPoint:
    flux_map: Dict[str, float]
    phi_min: np.ndarray
    hessian: np.ndarray
    well_ok: bool
    gradient_norm: float = 0.0
    iterations: int = 0

    def as_dict(self) -> Dict[str, Any]:
        return {
            "flux_map": dict(self.flux_map),
            "phi_min": [float(x) for x in self.phi_min],
            "hessian": np.asarray(self.hessian).tolist(),
            "well_ok": self.well_ok,
            "gradient_norm": self.gradient_norm,
            "iterations": self.iterations,
        }


@dataclass(frozen=True)
class DesignLimits:
    eta: float
    EJq_star: float
    E_C: float
    L_max: float
    L_crit: float
    k_crit: Optional[float] = None

    def as_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class DecoherenceTimes:
    """Times in seconds; math.inf when a channel is absent."""
    T1: float
    T2: float
    Tphi: float

    def as_dict(self) -> Dict[str, Any]:
        return {name: (None if math.isinf(v) else v) for name, v in asdict(self).items()}


@dataclass(frozen=True)
class ReadoutTrace:
    times: np.ndarray
    alpha: np.ndarray
    steady_state: complex
    qubit_state: int
    label: str = "static"
    meta: Dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class TableTarget:
    """
    One row of a design table. Either value +/- tol, or a bound lo/hi widened by tol.
    """
    key: str
    label: str
    unit: str
    value: Optional[float] = None
    tol: float = 0.0
    lo: Optional[float] = None
    hi: Optional[float] = None

    def check(self, computed: Optional[float]) -> bool:
        if computed is None or math.isnan(computed):
            return False
        if self.value is not None:
            return abs(computed - self.value) <= self.tol
        if self.lo is not None and computed < self.lo - self.tol:
            return False
        if self.hi is not None and computed > self.hi + self.tol:
            return False
        return True

    def describe(self) -> str:
        if self.value is not None:
            return f"{self.value:g} +/- {self.tol:g} {self.unit}".strip()
        if self.lo is not None and self.hi is not None:
            return f"[{self.lo:g}, {self.hi:g}] {self.unit}".strip()
        if self.hi is not None:
            return f"<= {self.hi:g} {self.unit}".strip()
        return f">= {self.lo:g} {self.unit}".strip()
