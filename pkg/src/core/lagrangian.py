# src/core/lagrangian.py
"""
Energy models of lumped circuits.

The kinetic part is T = (Phi0/2pi)^2 * 1/2 theta_dot^T C theta_dot with C in fF,
the potential U(theta; fluxes) is in GHz. Each term of U is a scalar function
of one linear combination of the variables (a branch) or a general quadratic
form; derivatives of every order up to four are analytic.

Flux maps are {symbol: Phi / Phi0}. A symbol the model does not know is an
error; a symbol the map leaves out is taken as zero flux.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, ClassVar, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .array import ArrayBranch, BranchPotential
from .errors import ConfigurationError, DomainError, ReductionRequiredError, StructureError
from .netlist import (ARRAY, CAPACITOR, IMPEDANCE, INDUCTOR, JUNCTION, CircuitGraph, SpanningTree,
                      assign_loop_fluxes, choose_spanning_tree)
from .settings import get_settings
from .units import CHARGE_ENERGY, FLUX_ENERGY

logger = logging.getLogger(__name__)


# -----------------------------------------------------------------------------
# Variable basis
# -----------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class VariableBasis:
    names: Tuple[str, ...]
    # one row of node coefficients per variable, columns follow nodes
    matrix: np.ndarray
    nodes: Tuple[str, ...]
    description: str = ""

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        n_nodes = len(self.nodes)
        if m.shape != (len(self.names), n_nodes):
            raise DomainError(f"Basis matrix shape {m.shape} does not match {len(self.names)} variables "
                              f"over {n_nodes} nodes")
        if len(self.names) != n_nodes - 1:
            raise DomainError(f"A basis over {n_nodes} nodes needs {n_nodes - 1} variables, got {len(self.names)}")
        if len(set(self.names)) != len(self.names):
            raise DomainError("Variable names must be unique", names=list(self.names))
        sums = m.sum(axis=1)
        for name, s in zip(self.names, sums):
            if abs(s) > 1e-12:
                raise DomainError(f"Variable {name!r} depends on the overall phase (coefficients sum to {s:g})")
        square = np.vstack([m, np.ones(n_nodes)])
        if np.linalg.matrix_rank(square) < n_nodes:
            raise DomainError("Variable basis is singular", names=list(self.names))
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        node_map = np.linalg.inv(square)[:, :-1]
        node_map.setflags(write=False)
        object.__setattr__(self, "_node_map", node_map)

    @property
    def node_map(self) -> np.ndarray:
        """Node phases as combinations of the variables, up to the common phase."""
        return self._node_map

    def node_index(self, node: str) -> int:
        return self.nodes.index(node)

    def branch_row(self, node_a: str, node_b: str) -> np.ndarray:
        """Coefficients of phi_a - phi_b in the variables."""
        return self._node_map[self.node_index(node_a)] - self._node_map[self.node_index(node_b)]

    @classmethod
    def from_graph(cls, graph: CircuitGraph) -> "VariableBasis":
        """
        Declared `var` rows first, completed by ground-referenced node phases
        phi_<node> until the basis is full.
        """
        nodes = graph.nodes
        col = {n: i for i, n in enumerate(nodes)}
        rows: List[np.ndarray] = []
        names: List[str] = []
        for decl in graph.variables:
            row = np.zeros(len(nodes))
            for node, coef in decl.coefficients:
                row[col[node]] += coef
            rows.append(row)
            names.append(decl.name)
        declared = len(rows)
        ground = graph.ground or nodes[0]
        for node in nodes:
            if len(rows) == len(nodes) - 1:
                break
            if node == ground:
                continue
            row = np.zeros(len(nodes))
            row[col[node]] = 1.0
            row[col[ground]] = -1.0
            trial = np.vstack(rows + [row, np.ones(len(nodes))])
            if np.linalg.matrix_rank(trial) == len(rows) + 2:
                rows.append(row)
                names.append(f"phi_{node}")
        if len(rows) != len(nodes) - 1:
            raise DomainError("Declared variables cannot be completed to a basis")
        desc = "declared" if declared == len(rows) else (f"{declared} declared, rest ground-referenced to {ground}"
                                                          if declared else f"node phases against {ground}")
        return cls(tuple(names), np.vstack(rows), nodes, desc)


# -----------------------------------------------------------------------------
# Potential terms
# -----------------------------------------------------------------------------
def _offset(flux: Mapping[str, float], phases: Mapping[str, float]) -> float:
    return sum(c * phases.get(sym, 0.0) for sym, c in flux.items())


@dataclass(frozen=True, eq=False)
class _BranchTerm:
    """Scalar function of x = row . theta, shifted by flux offsets."""
    name: str
    row: np.ndarray
    # {flux symbol: coefficient}; the branch phase gains coefficient * 2 pi Phi / Phi0
    flux: Dict[str, float]

    kind: ClassVar[str] = "branch"

    def __post_init__(self):
        r = np.array(self.row, dtype=float)
        r.setflags(write=False)
        object.__setattr__(self, "row", r)

    def chain(self, x: float, phases: Mapping[str, float]) -> np.ndarray:
        raise NotImplementedError

    def with_row(self, row: np.ndarray) -> "_BranchTerm":
        return replace(self, row=row)

    def tensors(self, theta: np.ndarray, phases: Mapping[str, float], order: int) -> List[Any]:
        g = self.chain(float(self.row @ theta), phases)
        r = self.row
        out: List[Any] = [g[0]]
        if order >= 1:
            out.append(g[1] * r)
        if order >= 2:
            rr = np.outer(r, r)
            out.append(g[2] * rr)
        if order >= 3:
            rrr = np.multiply.outer(rr, r)
            out.append(g[3] * rrr)
        if order >= 4:
            out.append(g[4] * np.multiply.outer(rrr, r))
        return out

    def describe(self) -> Dict[str, Any]:
        return {"name": self.name, "kind": self.kind, "row": [float(x) for x in self.row], "flux": dict(self.flux)}


@dataclass(frozen=True, eq=False)
class InductiveTerm(_BranchTerm):
    inductance: float = math.inf

    kind: ClassVar[str] = "inductive"

    @property
    def amplitude(self) -> float:
        """(Phi0/2pi)^2 / L in GHz."""
        return FLUX_ENERGY / self.inductance

    def chain(self, x: float, phases: Mapping[str, float]) -> np.ndarray:
        u = x + _offset(self.flux, phases)
        a = self.amplitude
        return np.array([0.5 * a * u * u, a * u, a, 0.0, 0.0])

    def describe(self) -> Dict[str, Any]:
        return {**super().describe(), "inductance_nH": self.inductance}


@dataclass(frozen=True, eq=False)
class CosineTerm(_BranchTerm):
    # -ej_total cos((x + offset)/k); ej_total = k E_J for an array
    ej_total: float = 0.0
    k: int = 1

    kind: ClassVar[str] = "cosine"

    def chain(self, x: float, phases: Mapping[str, float]) -> np.ndarray:
        k = self.k
        u = (x + _offset(self.flux, phases)) / k
        s, c = math.sin(u), math.cos(u)
        e = self.ej_total
        return np.array([-e * c, e / k * s, e / k ** 2 * c, -e / k ** 3 * s, -e / k ** 4 * c])

    def describe(self) -> Dict[str, Any]:
        return {**super().describe(), "ej_total_GHz": self.ej_total, "k": self.k}


@dataclass(frozen=True, eq=False)
class AdaptedBranchTerm(_BranchTerm):
    """Series inductance in front of an inductively shunted array, internal phase eliminated."""
    branch: Optional[ArrayBranch] = None

    kind: ClassVar[str] = "adapted"

    def chain(self, x: float, phases: Mapping[str, float]) -> np.ndarray:
        return BranchPotential(self.branch, _offset(self.flux, phases)).derivatives(x)

    def describe(self) -> Dict[str, Any]:
        b = self.branch
        return {**super().describe(), "k": b.k, "ej_each_GHz": b.ej_each, "L_nH": b.L, "La_nH": b.La,
                "critical_ratio": b.critical_ratio}


@dataclass(frozen=True, eq=False)
class QuadraticTerm:
    """1/2 theta^T K theta + sum_s (2 pi Phi_s / Phi0) v_s . theta, K in GHz."""
    name: str
    matrix: np.ndarray
    flux_vectors: Dict[str, np.ndarray] = field(default_factory=dict)

    kind: ClassVar[str] = "quadratic"

    def tensors(self, theta: np.ndarray, phases: Mapping[str, float], order: int) -> List[Any]:
        K = self.matrix
        n = len(theta)
        b = np.zeros(n)
        for sym, v in self.flux_vectors.items():
            b = b + phases.get(sym, 0.0) * v
        out: List[Any] = [0.5 * float(theta @ K @ theta) + float(b @ theta)]
        if order >= 1:
            out.append(K @ theta + b)
        if order >= 2:
            out.append(np.array(K, dtype=float))
        if order >= 3:
            out.append(np.zeros((n, n, n)))
        if order >= 4:
            out.append(np.zeros((n, n, n, n)))
        return out

    def transformed(self, inverse: np.ndarray) -> "QuadraticTerm":
        return QuadraticTerm(self.name, inverse.T @ self.matrix @ inverse,
                             {s: inverse.T @ v for s, v in self.flux_vectors.items()})

    def describe(self) -> Dict[str, Any]:
        return {"name": self.name, "kind": self.kind, "matrix": np.asarray(self.matrix).tolist()}


Term = Union[InductiveTerm, CosineTerm, AdaptedBranchTerm, QuadraticTerm]


# -----------------------------------------------------------------------------
# Energy model
# -----------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class EnergyModel:
    variables: Tuple[str, ...]
    cmat: np.ndarray
    terms: Tuple[Term, ...]
    flux_symbols: Tuple[str, ...] = ()
    basis: Optional[VariableBasis] = None

    def __post_init__(self):
        c = np.array(self.cmat, dtype=float)
        n = len(self.variables)
        if c.shape != (n, n):
            raise DomainError(f"Capacitance matrix shape {c.shape} does not match {n} variables")
        if not np.allclose(c, c.T, atol=1e-12 * max(1.0, np.abs(c).max())):
            raise DomainError("Capacitance matrix is not symmetric")
        c = 0.5 * (c + c.T)
        c.setflags(write=False)
        object.__setattr__(self, "cmat", c)
        object.__setattr__(self, "terms", tuple(self.terms))

    @property
    def dim(self) -> int:
        return len(self.variables)

    def index(self, name: str) -> int:
        try:
            return self.variables.index(name)
        except ValueError:
            raise ConfigurationError(f"Unknown variable {name!r}", variables=list(self.variables)) from None

    def phases(self, flux_map: Optional[Mapping[str, float]]) -> Dict[str, float]:
        flux_map = flux_map or {}
        unknown = sorted(set(flux_map) - set(self.flux_symbols))
        if unknown:
            raise ConfigurationError(f"Unknown flux symbol(s): {', '.join(unknown)}",
                                     symbols=list(self.flux_symbols))
        return {sym: 2.0 * math.pi * float(flux_map.get(sym, 0.0)) for sym in self.flux_symbols}

    def _theta(self, theta) -> np.ndarray:
        t = np.asarray(theta, dtype=float).reshape(-1)
        if t.shape != (self.dim,):
            raise DomainError(f"Phase vector of length {t.size} for {self.dim} variables")
        return t

    def derivatives(self, theta, flux_map: Optional[Mapping[str, float]] = None, order: int = 4) -> List[Any]:
        """[U, grad, hessian, third, fourth] up to the requested order, one pass over the terms."""
        t = self._theta(theta)
        phases = self.phases(flux_map)
        n = self.dim
        acc: List[Any] = [0.0] + [np.zeros((n,) * i) for i in range(1, order + 1)]
        for term in self.terms:
            for i, part in enumerate(term.tensors(t, phases, order)):
                acc[i] = acc[i] + part
        acc[0] = float(acc[0])
        return acc

    def potential(self, theta, flux_map: Optional[Mapping[str, float]] = None) -> float:
        return self.derivatives(theta, flux_map, order=0)[0]

    def gradient(self, theta, flux_map: Optional[Mapping[str, float]] = None) -> np.ndarray:
        return self.derivatives(theta, flux_map, order=1)[1]

    def hessian(self, theta, flux_map: Optional[Mapping[str, float]] = None) -> np.ndarray:
        return self.derivatives(theta, flux_map, order=2)[2]

    def third_derivative(self, theta, flux_map: Optional[Mapping[str, float]] = None) -> np.ndarray:
        return self.derivatives(theta, flux_map, order=3)[3]

    def fourth_derivative(self, theta, flux_map: Optional[Mapping[str, float]] = None) -> np.ndarray:
        return self.derivatives(theta, flux_map, order=4)[4]

    # -- structure queries ----------------------------------------------------
    def potential_weights(self) -> np.ndarray:
        """Per variable, the largest coefficient with which it enters any potential term."""
        w = np.zeros(self.dim)
        for term in self.terms:
            if isinstance(term, QuadraticTerm):
                w = np.maximum(w, np.abs(term.matrix).max(axis=1))
                for v in term.flux_vectors.values():
                    w = np.maximum(w, np.abs(v))
            else:
                w = np.maximum(w, np.abs(term.row))
        return w

    def kinetic_weights(self) -> np.ndarray:
        return np.abs(self.cmat).max(axis=1) if self.dim else np.zeros(0)

    def transformed(self, transform: np.ndarray, names: Sequence[str]) -> "EnergyModel":
        """Same energy in new variables theta' = transform @ theta."""
        inverse = np.linalg.inv(transform)
        cmat = inverse.T @ self.cmat @ inverse
        terms: List[Term] = []
        for term in self.terms:
            if isinstance(term, QuadraticTerm):
                terms.append(term.transformed(inverse))
            else:
                terms.append(term.with_row(term.row @ inverse))
        return EnergyModel(tuple(names), cmat, tuple(terms), self.flux_symbols)

    def restricted(self, keep: Sequence[int]) -> "EnergyModel":
        """Drop the variables not in keep. Only valid once they are decoupled."""
        keep = list(keep)
        terms: List[Term] = []
        for term in self.terms:
            if isinstance(term, QuadraticTerm):
                sub = term.matrix[np.ix_(keep, keep)]
                vecs = {s: v[keep] for s, v in term.flux_vectors.items()}
                if np.any(sub) or any(np.any(v) for v in vecs.values()):
                    terms.append(QuadraticTerm(term.name, sub, vecs))
            else:
                terms.append(term.with_row(term.row[keep]))
        return EnergyModel(tuple(self.variables[i] for i in keep), self.cmat[np.ix_(keep, keep)],
                           tuple(terms), self.flux_symbols)

    def describe(self) -> Dict[str, Any]:
        return {
            "variables": list(self.variables),
            "cmat_fF": self.cmat.tolist(),
            "terms": [t.describe() for t in self.terms],
            "flux_symbols": list(self.flux_symbols),
        }


def build_energy_model(graph: CircuitGraph, tree: Optional[SpanningTree] = None,
                       basis: Optional[VariableBasis] = None) -> EnergyModel:
    """One kinetic or potential term per circuit element, expressed in the basis variables."""
    tree = tree or choose_spanning_tree(graph)
    fluxes = assign_loop_fluxes(graph, tree)
    basis = basis or VariableBasis.from_graph(graph)
    if basis.nodes != graph.nodes:
        raise DomainError("Basis nodes do not match the circuit", basis=list(basis.nodes), graph=list(graph.nodes))

    n = len(basis.names)
    cmat = np.zeros((n, n))
    terms: List[Term] = []
    for b in graph.branches:
        row = basis.branch_row(b.node_a, b.node_b)
        flux = fluxes.coefficients(b.name)
        if b.kind == CAPACITOR:
            if flux:
                logger.debug("model: flux on capacitor %s does not enter the kinetic energy", b.name)
            cmat += b.value * np.outer(row, row)
        elif b.kind == INDUCTOR:
            terms.append(InductiveTerm(b.name, row, flux, inductance=b.value))
        elif b.kind in (JUNCTION, ARRAY):
            terms.append(CosineTerm(b.name, row, flux, ej_total=b.value, k=b.k))
        elif b.kind == IMPEDANCE:
            logger.debug("model: impedance %s is a bath port, no conservative energy", b.name)
    model = EnergyModel(basis.names, cmat, tuple(terms), graph.flux_symbols, basis)
    logger.debug("model: %d variables (%s), %d potential terms", n, basis.description, len(terms))
    return model


# -----------------------------------------------------------------------------
# Legendre transform
# -----------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class HamiltonianForm:
    variables: Tuple[str, ...]
    # inverse capacitance matrix (1/fF)
    cinv: np.ndarray
    # E_C matrix in GHz; kinetic energy is 4 n^T E_C n for Cooper-pair numbers n
    charging_matrix: np.ndarray

    @property
    def effective_capacitance(self) -> np.ndarray:
        """Per variable 1 / (C^-1)_mm in fF."""
        return 1.0 / np.diag(self.cinv)

    @property
    def charging_energies(self) -> np.ndarray:
        return np.diag(self.charging_matrix).copy()

    def is_decoupled(self, tol: float = 1e-12) -> bool:
        off = self.cinv - np.diag(np.diag(self.cinv))
        return bool(np.abs(off).max(initial=0.0) <= tol * np.abs(self.cinv).max())


def legendre_transform(model: EnergyModel) -> HamiltonianForm:
    cmat = model.cmat
    eig = np.linalg.eigvalsh(cmat) if model.dim else np.zeros(0)
    margin = get_settings().pd_margin
    if model.dim == 0 or eig.min() <= margin * max(eig.max(), 0.0):
        raise ReductionRequiredError(
            "Capacitance matrix is singular; eliminate massless variables first",
            variables=list(model.variables), eigenvalues=[float(x) for x in eig],
        )
    cinv = np.linalg.inv(cmat)
    cinv = 0.5 * (cinv + cinv.T)
    return HamiltonianForm(model.variables, cinv, CHARGE_ENERGY * cinv)


# -----------------------------------------------------------------------------
# Trigonometric expansion of the coupling branches
# -----------------------------------------------------------------------------
@dataclass(frozen=True)
class TrigExpansion:
    """
    -E_plus cos(a q + b r + x) - E_minus cos(-a q + b r + x) split into products of
    sin/cos of (a q), (b r) and x = phi_x / k, with E_sigma = E_plus + E_minus and
    E_delta = E_plus - E_minus (totals, k E_J for arrays).
    """
    qubit_var: str
    res_var: str
    e_sigma: float
    e_delta: float
    k: int
    # a and b in the arguments above
    qubit_scale: float
    res_scale: float
    flux: Dict[str, float]

    # (qubit parity, resonator parity, qubit function, resonator function)
    PARITY: ClassVar[Dict[str, Tuple[str, str, str, str]]] = {
        "xx": ("odd", "odd", "sin", "sin"),
        "zx": ("even", "odd", "cos", "sin"),
        "xz": ("odd", "even", "sin", "cos"),
        "zz": ("even", "even", "cos", "cos"),
    }

    def amplitudes(self, phi_x: float) -> Dict[str, float]:
        """Prefactors (GHz) of the four products at loop phase phi_x (rad)."""
        x = phi_x / self.k
        s, c = math.sin(x), math.cos(x)
        return {
            "xx": self.e_delta * c,
            "zx": self.e_sigma * s,
            "xz": self.e_delta * s,
            "zz": -self.e_sigma * c,
        }

    def loop_phase(self, flux_map: Mapping[str, float]) -> float:
        return sum(c * 2.0 * math.pi * flux_map.get(sym, 0.0) for sym, c in self.flux.items())

    def evaluate(self, q: float, r: float, phi_x: float) -> float:
        """Sum of the four products; equals the two original cosines."""
        A, B = self.qubit_scale * q, self.res_scale * r
        f = {"sin": math.sin, "cos": math.cos}
        total = 0.0
        for key, amp in self.amplitudes(phi_x).items():
            _, _, fq, fr = self.PARITY[key]
            total += amp * f[fq](A) * f[fr](B)
        return total


def trig_expand_coupling(model: EnergyModel, qubit_var: str, res_var: str) -> TrigExpansion:
    iq, ir = model.index(qubit_var), model.index(res_var)
    tol = 1e-12
    found = []
    for term in model.terms:
        if not isinstance(term, CosineTerm):
            continue
        row, flux = term.row, term.flux
        if abs(row[iq]) < tol or abs(row[ir]) < tol:
            continue
        others = np.delete(row, [iq, ir])
        if np.any(np.abs(others) > tol):
            continue
        if row[ir] < 0:
            row, flux = -row, {s: -c for s, c in flux.items()}
        found.append((term, row, flux))
    if len(found) != 2:
        raise StructureError(f"Expected two coupling branches across {qubit_var} and {res_var}, found {len(found)}",
                             branches=[t.name for t, _, _ in found])
    (t1, r1, f1), (t2, r2, f2) = found
    if t1.k != t2.k:
        raise StructureError("Coupling branches have different junction counts", k=[t1.k, t2.k])
    if not (math.isclose(r1[ir], r2[ir], rel_tol=1e-9) and math.isclose(r1[iq], -r2[iq], rel_tol=1e-9)):
        raise StructureError("Coupling branches are not mirror images in the qubit variable")
    symbols = set(f1) | set(f2)
    if any(not math.isclose(f1.get(s, 0.0), f2.get(s, 0.0), abs_tol=1e-12) for s in symbols):
        raise StructureError("Coupling branches are not threaded by the same loop flux")
    if r1[iq] < 0:
        (t1, r1, f1), (t2, r2, f2) = (t2, r2, f2), (t1, r1, f1)
    k = t1.k
    return TrigExpansion(
        qubit_var=qubit_var, res_var=res_var,
        e_sigma=t1.ej_total + t2.ej_total, e_delta=t1.ej_total - t2.ej_total, k=k,
        qubit_scale=r1[iq] / k, res_scale=r1[ir] / k, flux=dict(f1),
    )
