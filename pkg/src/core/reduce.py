# src/core/reduce.py
"""
Exact elimination of superfluous variables.

A variable missing from the potential is decoupled from the kinetic energy by a
single unit row (the normalized row of C) and dropped. A variable missing from
the kinetic energy is fixed by dU/dv = 0: quadratic dependence is solved by the
same unit-row congruence on the inductive form, and an inductively shunted array
behind a series inductance is folded into an adapted branch term.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from .array import ArrayBranch
from .errors import StructureError
from .lagrangian import (AdaptedBranchTerm, CosineTerm, EnergyModel, InductiveTerm, QuadraticTerm, Term)
from .netlist import CAPACITOR, INDUCTOR, Branch, CircuitGraph, FluxLoop
from .settings import get_settings

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ReductionReport:
    eliminated: Tuple[str, ...]
    # rows map the original variables to the new ones; eliminated rows are the decoupled coordinates
    transform: np.ndarray
    kept_unchanged: Tuple[str, ...]
    folded: Tuple[str, ...] = ()
    transformed_cmat: Optional[np.ndarray] = None
    variables: Tuple[str, ...] = ()
    steps: Tuple[Dict[str, Any], ...] = field(default=())

    @property
    def is_identity(self) -> bool:
        return not self.eliminated

    def to_dict(self) -> Dict[str, Any]:
        return {
            "variables": list(self.variables),
            "eliminated": list(self.eliminated),
            "kept_unchanged": list(self.kept_unchanged),
            "folded": list(self.folded),
            "transform": np.asarray(self.transform).tolist(),
            "transformed_cmat_fF": None if self.transformed_cmat is None else np.asarray(self.transformed_cmat).tolist(),
            "steps": [dict(s) for s in self.steps],
        }


def _involves(term: Term, i: int, tol: float) -> bool:
    if isinstance(term, QuadraticTerm):
        return bool(np.abs(term.matrix[i]).max() > tol or any(abs(v[i]) > tol for v in term.flux_vectors.values()))
    return abs(term.row[i]) > tol


def _unit_row(n: int, i: int, row: np.ndarray) -> np.ndarray:
    R = np.eye(n)
    R[i] = row / row[i]
    return R


# -----------------------------------------------------------------------------
# Single steps
# -----------------------------------------------------------------------------
def _drop_potential_free(model: EnergyModel, i: int) -> Tuple[EnergyModel, np.ndarray, Dict[str, Any]]:
    C = model.cmat
    w = C[i] / C[i, i]
    R = _unit_row(model.dim, i, C[i])
    keep = [j for j in range(model.dim) if j != i]
    reduced = model.transformed(R, model.variables).restricted(keep)
    return reduced, w, {"variable": model.variables[i], "method": "potential_free", "mass_fF": float(C[i, i])}


def _quadratic_parts(terms: Sequence[Term], n: int) -> Tuple[np.ndarray, Dict[str, np.ndarray]]:
    K = np.zeros((n, n))
    vecs: Dict[str, np.ndarray] = {}
    for term in terms:
        if isinstance(term, QuadraticTerm):
            K += term.matrix
            for s, v in term.flux_vectors.items():
                vecs[s] = vecs.get(s, np.zeros(n)) + v
        else:
            a = term.amplitude
            K += a * np.outer(term.row, term.row)
            for s, c in term.flux.items():
                vecs[s] = vecs.get(s, np.zeros(n)) + a * c * term.row
    return K, vecs


def _drop_quadratic_massless(model: EnergyModel, i: int, involved: List[Term],
                             others: List[Term]) -> Tuple[EnergyModel, np.ndarray, Dict[str, Any]]:
    n = model.dim
    K, vecs = _quadratic_parts(involved, n)
    if K[i, i] <= 0:
        raise StructureError(f"Variable {model.variables[i]} has no restoring force", variable=model.variables[i])
    keep = [j for j in range(n) if j != i]
    w = K[i] / K[i, i]
    Kr = K[np.ix_(keep, keep)] - np.outer(K[keep, i], K[i, keep]) / K[i, i]
    vr = {s: v[keep] - K[keep, i] * v[i] / K[i, i] for s, v in vecs.items()}
    name = "+".join(t.name for t in involved)
    terms: List[Term] = [t.with_row(t.row[keep]) if not isinstance(t, QuadraticTerm) else
                         QuadraticTerm(t.name, t.matrix[np.ix_(keep, keep)],
                                       {s: v[keep] for s, v in t.flux_vectors.items()})
                         for t in others]
    terms.append(QuadraticTerm(name, Kr, vr))
    reduced = EnergyModel(tuple(model.variables[j] for j in keep), model.cmat[np.ix_(keep, keep)],
                          tuple(terms), model.flux_symbols)
    return reduced, w, {"variable": model.variables[i], "method": "massless_quadratic", "terms": name}


def _fold_adapted_branch(model: EnergyModel, i: int, involved: List[Term],
                         others: List[Term]) -> Tuple[EnergyModel, np.ndarray, Dict[str, Any]]:
    """Series inductor -> (shunt inductor || array) with a massless internal node."""
    tol = 1e-12
    arrays = [t for t in involved if isinstance(t, CosineTerm)]
    inductors = [t for t in involved if isinstance(t, InductiveTerm)]
    if len(arrays) != 1 or len(inductors) != 2 or len(involved) != 3:
        raise StructureError(f"Massless variable {model.variables[i]} enters a cosine outside the "
                             f"series-inductance pattern", terms=[t.name for t in involved])
    array = arrays[0]

    def local(row: np.ndarray) -> bool:
        return abs(abs(row[i]) - 1.0) < tol and np.all(np.abs(np.delete(row, i)) < tol)

    if not local(array.row):
        raise StructureError("Array across the massless node must span exactly that variable", term=array.name)
    shunts = [t for t in inductors if local(t.row)]
    series = [t for t in inductors if not local(t.row)]
    if len(shunts) != 1 or len(series) != 1:
        raise StructureError("Expected one shunt and one series inductor at the massless node",
                             terms=[t.name for t in inductors])
    shunt, la = shunts[0], series[0]
    if shunt.flux or la.flux:
        raise StructureError("Loop flux must thread the array branch, not the inductors; use the devoret tree",
                             terms=[shunt.name, la.name])
    s = array.row[i]
    flux = dict(array.flux) if s > 0 else {sym: -c for sym, c in array.flux.items()}
    row = np.array(la.row)
    if abs(abs(row[i]) - 1.0) > tol:
        raise StructureError("Series inductor must end on the massless node", term=la.name)
    if row[i] * s > 0:
        row = -row
    keep = [j for j in range(model.dim) if j != i]
    ab = ArrayBranch(k=array.k, ej_each=array.ej_total / array.k, L=shunt.inductance, La=la.inductance)
    ab.require_invertible()
    adapted = AdaptedBranchTerm(f"{la.name}+{array.name}+{shunt.name}", row[keep], flux, branch=ab)
    terms: List[Term] = [t.with_row(t.row[keep]) if not isinstance(t, QuadraticTerm) else
                         QuadraticTerm(t.name, t.matrix[np.ix_(keep, keep)],
                                       {sym: v[keep] for sym, v in t.flux_vectors.items()})
                         for t in others]
    terms.append(adapted)
    reduced = EnergyModel(tuple(model.variables[j] for j in keep), model.cmat[np.ix_(keep, keep)],
                          tuple(terms), model.flux_symbols)
    w = np.zeros(model.dim)
    w[i] = 1.0
    logger.info("reduce: folded %s into an adapted branch (k*gamma/beta = %.4g)", adapted.name, ab.critical_ratio)
    return reduced, w, {"variable": model.variables[i], "method": "adapted_branch", "terms": adapted.name,
                        "critical_ratio": ab.critical_ratio}


def _drop_massless(model: EnergyModel, i: int) -> Tuple[EnergyModel, np.ndarray, Dict[str, Any]]:
    tol = 1e-12
    involved = [t for t in model.terms if _involves(t, i, tol)]
    others = [t for t in model.terms if not _involves(t, i, tol)]
    if all(isinstance(t, (InductiveTerm, QuadraticTerm)) for t in involved):
        return _drop_quadratic_massless(model, i, involved, others)
    return _fold_adapted_branch(model, i, involved, others)


# -----------------------------------------------------------------------------
# Driver
# -----------------------------------------------------------------------------
def _candidates(model: EnergyModel) -> Tuple[List[str], List[str]]:
    thr = get_settings().zero_threshold
    pot = model.potential_weights()
    kin = model.kinetic_weights()
    pmax = max(pot.max(initial=0.0), 1e-300)
    kmax = max(kin.max(initial=0.0), 1e-300)
    potential_free = [v for v, p, k in zip(model.variables, pot, kin) if p < thr * pmax and k >= thr * kmax]
    massless = [v for v, p, k in zip(model.variables, pot, kin) if k < thr * kmax and p >= thr * pmax]
    isolated = [v for v, p, k in zip(model.variables, pot, kin) if k < thr * kmax and p < thr * pmax]
    if isolated:
        raise StructureError(f"Variable(s) {', '.join(isolated)} appear in neither energy", variables=isolated)
    return sorted(potential_free), sorted(massless)


def eliminate_massless_or_potential_free(model: EnergyModel) -> Tuple[EnergyModel, ReductionReport]:
    """
    Eliminate candidates one at a time in name order, potential-free ones first.
    Kept variables are never transformed.
    """
    n = model.dim
    original = model.variables
    cmat0 = model.cmat
    R = np.eye(n)
    alive = list(range(n))
    eliminated: List[str] = []
    folded: List[str] = []
    steps: List[Dict[str, Any]] = []

    while True:
        potential_free, massless = _candidates(model)
        if not potential_free and not massless:
            break
        name = (potential_free or massless)[0]
        i = model.index(name)
        if potential_free:
            model, w, step = _drop_potential_free(model, i)
        else:
            model, w, step = _drop_massless(model, i)
            if step["method"] == "adapted_branch":
                folded.append(step["terms"])
        gi = alive[i]
        R[gi] = w @ R[alive]
        alive.pop(i)
        eliminated.append(name)
        steps.append(step)
        logger.debug("reduce: eliminated %s (%s)", name, step["method"])

    kept = tuple(original[j] for j in alive)
    unchanged = tuple(original[j] for j in alive if np.array_equal(R[j], np.eye(n)[j]))
    Rinv = np.linalg.inv(R)
    report_cmat = Rinv.T @ cmat0 @ Rinv
    report = ReductionReport(
        eliminated=tuple(eliminated), transform=R, kept_unchanged=unchanged, folded=tuple(folded),
        transformed_cmat=report_cmat, variables=original, steps=tuple(steps),
    )
    if eliminated:
        logger.info("reduce: eliminated %s, kept %s", list(eliminated), list(kept))
    return model, report


def eliminate_quadratic(matrix: np.ndarray, names: Sequence[str],
                        eliminate: Sequence[str]) -> Tuple[np.ndarray, np.ndarray]:
    """
    Unit-row elimination on a bare quadratic form (e.g. a kinetic matrix whose
    eliminated variables are known to be potential-free). Returns the kept block
    and the full transform.
    """
    names = list(names)
    M = np.array(matrix, dtype=float)
    idx = [names.index(v) for v in eliminate]
    try:
        scipy.linalg.cholesky(M[np.ix_(idx, idx)])
    except np.linalg.LinAlgError:
        raise StructureError("Eliminated block is not positive definite", variables=list(eliminate)) from None
    n = len(names)
    R = np.eye(n)
    current = M.copy()
    for v in sorted(eliminate):
        i = names.index(v)
        step = _unit_row(n, i, current[i])
        inv = np.linalg.inv(step)
        current = inv.T @ current @ inv
        R = step @ R
    keep = [j for j in range(n) if names[j] not in set(eliminate)]
    return current[np.ix_(keep, keep)], R


# -----------------------------------------------------------------------------
# Series / parallel simplification on the graph
# -----------------------------------------------------------------------------
def _merge_value(kind: str, a: float, b: float, series: bool) -> float:
    adds = (kind == INDUCTOR) == series
    return a + b if adds else a * b / (a + b)


def _loop_branches(graph: CircuitGraph) -> Dict[str, int]:
    count: Dict[str, int] = {}
    for loop in graph.loops:
        for name, _ in loop.branches:
            count[name] = count.get(name, 0) + 1
    return count


def _merge_parallel(graph: CircuitGraph) -> Optional[CircuitGraph]:
    in_loops = _loop_branches(graph)
    seen: Dict[Tuple[str, frozenset], Branch] = {}
    for b in graph.branches:
        if b.kind not in (CAPACITOR, INDUCTOR) or b.name in in_loops:
            continue
        key = (b.kind, frozenset(b.endpoints))
        other = seen.get(key)
        if other is None:
            seen[key] = b
            continue
        merged = replace(other, name=f"{other.name}_{b.name}", value=_merge_value(b.kind, other.value, b.value, False))
        branches = tuple(merged if x.name == other.name else x for x in graph.branches if x.name != b.name)
        logger.debug("simplify: %s || %s", other.name, b.name)
        return replace(graph, branches=branches)
    return None


def _merge_series(graph: CircuitGraph) -> Optional[CircuitGraph]:
    protected = {graph.ground} | {node for v in graph.variables for node, _ in v.coefficients}
    for node in graph.nodes:
        if node in protected:
            continue
        touching = [b for b in graph.branches if node in b.endpoints]
        if len(touching) != 2:
            continue
        b1, b2 = touching
        if b1.kind != b2.kind or b1.kind not in (CAPACITOR, INDUCTOR):
            continue
        u = b1.node_b if b1.node_a == node else b1.node_a
        w = b2.node_b if b2.node_a == node else b2.node_a
        if u == w:
            continue
        loops: List[FluxLoop] = []
        ok = True
        for loop in graph.loops:
            names = [name for name, _ in loop.branches]
            if (b1.name in names) != (b2.name in names):
                ok = False
                break
            if b1.name not in names:
                loops.append(loop)
                continue
            sign1 = dict(loop.branches)[b1.name]
            # traversal of b1 from u towards node is the merged branch's positive direction
            forward = (b1.node_a == u) == (sign1 > 0)
            entries = []
            for name, sign in loop.branches:
                if name == b1.name:
                    entries.append((f"{b1.name}-{b2.name}", 1 if forward else -1))
                elif name != b2.name:
                    entries.append((name, sign))
            loops.append(replace(loop, branches=tuple(entries)))
        if not ok:
            continue
        merged = Branch(name=f"{b1.name}-{b2.name}", kind=b1.kind, node_a=u, node_b=w,
                        value=_merge_value(b1.kind, b1.value, b2.value, True))
        branches = []
        for b in graph.branches:
            if b.name == b1.name:
                branches.append(merged)
            elif b.name != b2.name:
                branches.append(b)
        logger.debug("simplify: %s -- %s through %s", b1.name, b2.name, node)
        return replace(graph, nodes=tuple(n for n in graph.nodes if n != node), branches=tuple(branches),
                       loops=tuple(loops))
    return None


def series_parallel_simplify(graph: CircuitGraph) -> CircuitGraph:
    """
    Merge parallel and series capacitors and inductors until nothing changes.
    Junctions, arrays, impedances and branches that carry loop flux alone are left alone.
    """
    current = graph
    while True:
        nxt = _merge_parallel(current) or _merge_series(current)
        if nxt is None:
            break
        current = nxt
    if len(current.branches) != len(graph.branches):
        logger.info("simplify: %d branches -> %d", len(graph.branches), len(current.branches))
    return current
