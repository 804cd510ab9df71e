# src/core/multiblock.py
"""
Scale-up: one qubit with several resonators, two capacitively coupled blocks,
stray capacitance, square-plaquette kinetic matrices and the resulting
resonator-resonator couplings.

Kinetic matrices follow the model normalization T = (Phi0/2pi)^2 * 1/2 theta_dot^T C theta_dot,
so the reduced resonator block of two coupled blocks reads
[[C1/2 + C_bmu/8, -C_bmu/8], [-C_bmu/8, C2/2 + C_bmu/8]].
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from .circuits import two_block_netlist
from .errors import ConfigurationError, DomainError
from .lagrangian import EnergyModel, build_energy_model
from .models import CouplerParams, ModeSpectrum
from .netlist import parse
from .reduce import ReductionReport, eliminate_massless_or_potential_free, eliminate_quadratic
from .spectrum import eta
from .units import CHARGE_ENERGY, FLUX_ENERGY, IMPEDANCE_UNIT, inductive_energy

logger = logging.getLogger(__name__)


def _series2(x: float, y: float) -> float:
    """2xy/(x+y), with the infinite and vanishing limits."""
    if x == 0 or y == 0:
        return 0.0
    if math.isinf(x):
        return 2.0 * y
    if math.isinf(y):
        return 2.0 * x
    return 2.0 * x * y / (x + y)


@dataclass(frozen=True)
class EffectiveCouplingCaps:
    C_gmu: float
    C_bmu: float
    C_mu: float


def effective_caps(Cg1: float, Cg2: float, C1: float, C2: float, Cb: Optional[float] = None) -> EffectiveCouplingCaps:
    """Cb=None is the fused node (Cb -> infinity)."""
    for name, v in (("Cg1", Cg1), ("Cg2", Cg2), ("C1", C1), ("C2", C2)):
        if v < 0:
            raise DomainError(f"{name} must not be negative", **{name: v})
    C_gmu = _series2(Cg1, Cg2)
    C_bmu = _series2(math.inf if Cb is None else Cb, C_gmu)
    return EffectiveCouplingCaps(C_gmu=C_gmu, C_bmu=C_bmu, C_mu=_series2(C1, C2))


@dataclass(frozen=True)
class BlockParams:
    block1: CouplerParams
    block2: CouplerParams
    # inter-block capacitor (fF); None fuses the two coupling nodes
    Cb: Optional[float] = None
    # stray capacitance of the fused node to ground (fF)
    Cs: float = 0.0

    def __post_init__(self):
        if self.Cb is not None and self.Cb < 0:
            raise DomainError("Cb must not be negative", Cb=self.Cb)
        if self.Cs and self.Cb is not None:
            raise ConfigurationError("Stray capacitance is modelled for the fused-node variant only")

    @property
    def caps(self) -> EffectiveCouplingCaps:
        return effective_caps(self.block1.Cg, self.block2.Cg, self.block1.C, self.block2.C, self.Cb)


# -----------------------------------------------------------------------------
# n resonators on one qubit
# -----------------------------------------------------------------------------
def n_resonator_substitution(qubit: CouplerParams, arms: Sequence[CouplerParams],
                             phi_x: float = 0.0) -> Tuple[ModeSpectrum, List[str]]:
    """
    Qubit spectrum with C -> sum (C_l + Cg_l) and 1/L -> sum 1/L_l, each arm carrying
    its own coupling branches. Resonator spectra are those of the single block.
    """
    if not arms:
        raise DomainError("At least one resonator arm is needed")
    c_total = qubit.Cq * 2.0 + sum(a.C + a.Cg for a in arms)
    E_C = 2.0 * CHARGE_ENERGY / c_total
    stiffness = qubit.ej_q
    quartic = -qubit.ej_q
    for a in arms:
        h = eta(a.ej_sigma, a.k, a.L, phi_x)
        stiffness += inductive_energy(a.L) * (1.0 + h)
        quartic -= a.ej_sigma * math.cos(phi_x / a.k) / (16.0 * a.k ** 3)
    freq = math.sqrt(8.0 * E_C * stiffness)
    alpha = E_C * quartic / stiffness
    zpf = (2.0 * E_C / stiffness) ** 0.25
    warnings: List[str] = []
    inductive = sum(FLUX_ENERGY / (4.0 * a.L) for a in arms)
    if qubit.ej_q <= inductive:
        warnings.append(f"E_Jq = {qubit.ej_q:.4g} GHz is not large against the inductive "
                        f"load {inductive:.4g} GHz of {len(arms)} arm(s); the qubit is nearly harmonic")
    for w in warnings:
        logger.warning("multiblock: %s", w)
    spectrum = ModeSpectrum(name="qubit", frequency=freq, Z0=zpf ** 2 * IMPEDANCE_UNIT, phi_zpf=zpf, alpha=alpha,
                            alpha_rel=alpha / (freq + alpha), E_C=E_C, stiffness=stiffness, Delta=freq + alpha)
    return spectrum, warnings


# -----------------------------------------------------------------------------
# Two coupled blocks
# -----------------------------------------------------------------------------
SYSTEM_VARIABLES = ("phi_q_1", "phi_r_1", "phi_q_2", "phi_r_2")


@dataclass(frozen=True, eq=False)
class CoupledBlocks:
    model: EnergyModel
    report: ReductionReport
    # reduced kinetic matrix over SYSTEM_VARIABLES (fF)
    cmat: np.ndarray

    @property
    def resonator_block(self) -> np.ndarray:
        idx = [SYSTEM_VARIABLES.index("phi_r_1"), SYSTEM_VARIABLES.index("phi_r_2")]
        return self.cmat[np.ix_(idx, idx)]

    @property
    def coupling_coefficient(self) -> float:
        """Coefficient of (dphi_r1/dt - dphi_r2/dt)^2 in units of (Phi0/2pi)^2, fF."""
        return -0.5 * float(self.resonator_block[0, 1])


def coupled_block_reduction(bp: BlockParams) -> CoupledBlocks:
    """Build the two-block circuit, eliminate the coupling-node variables, return the system block."""
    graph = parse(two_block_netlist(bp.block1, bp.block2, bp.Cb, bp.Cs))
    model, report = eliminate_massless_or_potential_free(build_energy_model(graph))
    order = [model.index(v) for v in SYSTEM_VARIABLES]
    cmat = model.cmat[np.ix_(order, order)]
    logger.debug("multiblock: eliminated %s, resonator block %s", report.eliminated, cmat[1::2, 1::2].tolist())
    return CoupledBlocks(model=model, report=report, cmat=cmat)


def stray_capacitance_rescale(Cg1: float, Cg2: float, Cs: float) -> float:
    """Coupling coefficient Cg1 Cg2 / (2 (2Cg1 + 2Cg2 + Cs)) of the fused node with stray Cs."""
    denom = 2.0 * (2.0 * Cg1 + 2.0 * Cg2 + Cs)
    if math.isinf(Cs) or denom == 0:
        return 0.0
    return Cg1 * Cg2 / denom


def resonator_block_matrix(C1: float, C2: float, C_bmu: float) -> np.ndarray:
    return np.array([[C1 / 2.0 + C_bmu / 8.0, -C_bmu / 8.0], [-C_bmu / 8.0, C2 / 2.0 + C_bmu / 8.0]])


@dataclass(frozen=True)
class CoupledResonators:
    # omega/2pi in GHz
    f_r1: float
    f_r2: float
    # Ohm
    Z_r1: float
    Z_r2: float
    # g_c/2pi in GHz
    g_c: float

    def as_dict(self) -> Dict[str, float]:
        return dict(self.__dict__)


def coupled_resonator_spectrum(bp: BlockParams, phi_x: Tuple[float, float] = (0.0, 0.0),
                               kinetic: Optional[np.ndarray] = None) -> CoupledResonators:
    """
    Resonator frequencies, impedances and coupling from the 2x2 resonator kinetic
    block (closed-form block unless one is passed in).
    """
    p1, p2 = bp.block1, bp.block2
    K = resonator_block_matrix(p1.C, p2.C, bp.caps.C_bmu) if kinetic is None else np.asarray(kinetic, dtype=float)
    Kinv = np.linalg.inv(K)
    out = []
    for i, (p, px) in enumerate(((p1, phi_x[0]), (p2, phi_x[1]))):
        h = eta(p.ej_sigma, p.k, p.L, px)
        stiffness = inductive_energy(p.L) * (1.0 + h)
        f = math.sqrt(8.0 * CHARGE_ENERGY * Kinv[i, i] * stiffness)
        zpf2 = math.sqrt(2.0 * CHARGE_ENERGY * Kinv[i, i] / stiffness)
        out.append((f, zpf2))
    (f1, z1), (f2, z2) = out
    # charge cross term 8 E_C,12 n1 n2 with n = i(b^dag - b)/(2 zpf); g_c <= 0 for equal blocks
    g_c = -2.0 * CHARGE_ENERGY * abs(Kinv[0, 1]) / math.sqrt(z1 * z2)
    return CoupledResonators(f_r1=f1, f_r2=f2, Z_r1=z1 * IMPEDANCE_UNIT, Z_r2=z2 * IMPEDANCE_UNIT, g_c=g_c)


def dressed_frequencies(omega_1: float, omega_2: float, g_c: float) -> Tuple[float, float]:
    """(omega_plus, omega_minus) of two coupled resonators, same units as the inputs."""
    mean = 0.5 * (omega_1 ** 2 + omega_2 ** 2)
    root = 0.5 * math.sqrt((omega_1 ** 2 - omega_2 ** 2) ** 2 + 16.0 * g_c ** 2 * omega_1 * omega_2)
    if mean - root < 0:
        raise DomainError("Over-coupled resonators: omega_minus^2 < 0", omega_1=omega_1, omega_2=omega_2, g_c=g_c)
    return math.sqrt(mean + root), math.sqrt(mean - root)


def normal_mode_oracle(kinetic: np.ndarray, stiffness: Sequence[float]) -> np.ndarray:
    """Generalized eigenfrequencies (GHz, ascending) of diag(stiffness) against the kinetic block."""
    lam = scipy.linalg.eigh(np.diag(stiffness), np.asarray(kinetic, dtype=float), eigvals_only=True)
    return np.sqrt(8.0 * CHARGE_ENERGY * lam)


# -----------------------------------------------------------------------------
# Square plaquette
# -----------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class LinkMatrices:
    name: str
    blocks: Tuple[str, str]
    # (r_a, r_b, n_a, n_b), or (r_a, r_b, n) for a fused link
    variables: Tuple[str, ...]
    C_l: np.ndarray
    C_tilde: np.ndarray
    caps: EffectiveCouplingCaps
    resonators: CoupledResonators
    dressed: Tuple[float, float]


@dataclass(frozen=True, eq=False)
class PlaquetteResult:
    links: Dict[str, LinkMatrices]
    variables: Tuple[str, ...]
    cmat: np.ndarray
    is_local: bool
    qubits: Dict[str, ModeSpectrum] = field(default_factory=dict)


def link_matrix(pa: CouplerParams, pb: CouplerParams, Cb: Optional[float]) -> Tuple[np.ndarray, Tuple[int, ...]]:
    """Kinetic matrix of one link before reduction and the indices of its superfluous variables."""
    if Cb is None:
        C = np.zeros((3, 3))
        C[0, 0] = pa.C / 2.0 + pa.Cg / 2.0
        C[1, 1] = pb.C / 2.0 + pb.Cg / 2.0
        C[0, 2] = C[2, 0] = -pa.Cg
        C[1, 2] = C[2, 1] = -pb.Cg
        C[2, 2] = 2.0 * pa.Cg + 2.0 * pb.Cg
        return C, (2,)
    C = np.zeros((4, 4))
    C[0, 0] = pa.C / 2.0 + pa.Cg / 2.0
    C[1, 1] = pb.C / 2.0 + pb.Cg / 2.0
    C[0, 2] = C[2, 0] = -pa.Cg
    C[1, 3] = C[3, 1] = -pb.Cg
    C[2, 2] = 2.0 * pa.Cg + Cb
    C[3, 3] = 2.0 * pb.Cg + Cb
    C[2, 3] = C[3, 2] = -Cb
    return C, (2, 3)


def plaquette_matrices(blocks: Mapping[str, CouplerParams], links: Sequence[Tuple[str, str, str, Optional[float]]],
                       phi_x: Optional[Mapping[str, float]] = None) -> PlaquetteResult:
    """
    links: (name, block_a, block_b, Cb). Every link is reduced on its own; the
    assembled matrix holds one qubit variable per block and one resonator
    variable per (link, block).
    """
    phi_x = dict(phi_x or {})
    unknown = sorted({b for _, a, c, _ in links for b in (a, c)} - set(blocks))
    if unknown:
        raise ConfigurationError(f"Links refer to unknown block(s): {', '.join(unknown)}")
    result_links: Dict[str, LinkMatrices] = {}
    arms: Dict[str, List[CouplerParams]] = {name: [] for name in blocks}
    for name, a, b, Cb in links:
        pa, pb = blocks[a], blocks[b]
        C_l, superfluous = link_matrix(pa, pb, Cb)
        names = (f"phi_r_{a}_{name}", f"phi_r_{b}_{name}") + tuple(f"phi_n{i}_{name}" for i in range(len(superfluous)))
        if pa.Cg == 0 or pb.Cg == 0 or Cb == 0:
            C_tilde = C_l[:2, :2].copy()
            C_tilde[0, 0], C_tilde[1, 1] = pa.C / 2.0, pb.C / 2.0
            C_tilde[0, 1] = C_tilde[1, 0] = 0.0
        else:
            C_tilde, _ = eliminate_quadratic(C_l, names, [names[i] for i in superfluous])
        caps = effective_caps(pa.Cg, pb.Cg, pa.C, pb.C, Cb)
        bp = BlockParams(pa, pb, Cb)
        res = coupled_resonator_spectrum(bp, (phi_x.get(a, 0.0), phi_x.get(b, 0.0)), kinetic=C_tilde)
        dressed = dressed_frequencies(res.f_r1, res.f_r2, res.g_c)
        result_links[name] = LinkMatrices(name=name, blocks=(a, b), variables=names, C_l=C_l, C_tilde=C_tilde,
                                          caps=caps, resonators=res, dressed=dressed)
        arms[a].append(pa)
        arms[b].append(pb)

    variables: List[str] = [f"phi_q_{b}" for b in blocks]
    for link in result_links.values():
        variables.extend(link.variables[:2])
    index = {v: i for i, v in enumerate(variables)}
    cmat = np.zeros((len(variables), len(variables)))
    for b, p in blocks.items():
        n_arms = max(len(arms[b]), 1)
        cmat[index[f"phi_q_{b}"], index[f"phi_q_{b}"]] = (2.0 * p.Cq + n_arms * (p.C + p.Cg)) / 2.0
    for link in result_links.values():
        idx = [index[v] for v in link.variables[:2]]
        cmat[np.ix_(idx, idx)] += link.C_tilde

    is_local = _check_locality(cmat, variables, result_links)
    qubits = {b: n_resonator_substitution(p, arms[b] or [p], phi_x.get(b, 0.0))[0] for b, p in blocks.items()}
    logger.info("plaquette: %d blocks, %d links, local=%s", len(blocks), len(result_links), is_local)
    return PlaquetteResult(links=result_links, variables=tuple(variables), cmat=cmat, is_local=is_local, qubits=qubits)


def _check_locality(cmat: np.ndarray, variables: Sequence[str], links: Mapping[str, LinkMatrices]) -> bool:
    group: Dict[str, str] = {v: v for v in variables if v.startswith("phi_q_")}
    for link in links.values():
        for v in link.variables[:2]:
            group[v] = link.name
    scale = np.abs(cmat).max()
    for i, vi in enumerate(variables):
        for j, vj in enumerate(variables):
            if group[vi] != group[vj] and abs(cmat[i, j]) > 1e-14 * scale:
                return False
    return True
