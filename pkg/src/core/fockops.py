# src/core/fockops.py
"""
Dense operators on truncated Fock spaces, Pauli truncation and tensor embedding.

Pauli convention, basis (|0>, |1>):
    sigma_z = |1><1| - |0><0|      so that a^dag a -> (sigma_z + sigma_0)/2
    sigma_x = a^dag + a
    sigma_y = i(a - a^dag)         so that sigma_x sigma_y sigma_z = i sigma_0
    sigma_+ = |1><0|, sigma_- = |0><1|
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import reduce
from typing import Dict, Iterable, Sequence, Tuple, Union

import numpy as np
import scipy.linalg

from .errors import DomainError, ResourceError, ShapeError
from .settings import get_settings
from .units import hbar

logger = logging.getLogger(__name__)

Number = Union[int, float, complex]


@dataclass(frozen=True, eq=False)
class FockOperator:
    dim: int
    matrix: np.ndarray
    label: str = ""

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (self.dim, self.dim):
            raise ShapeError(f"Matrix shape {m.shape} does not match dim {self.dim}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    # -- algebra ---------------------------------------------------------------
    def _check(self, other: "FockOperator") -> None:
        if other.dim != self.dim:
            raise ShapeError(f"Dimension mismatch: {self.dim} vs {other.dim}")

    def __matmul__(self, other: "FockOperator") -> "FockOperator":
        self._check(other)
        return FockOperator(self.dim, self.matrix @ other.matrix, f"({self.label})({other.label})")

    def __add__(self, other: "FockOperator") -> "FockOperator":
        self._check(other)
        return FockOperator(self.dim, self.matrix + other.matrix, f"{self.label}+{other.label}")

    def __sub__(self, other: "FockOperator") -> "FockOperator":
        self._check(other)
        return FockOperator(self.dim, self.matrix - other.matrix, f"{self.label}-{other.label}")

    def __mul__(self, scalar: Number) -> "FockOperator":
        return FockOperator(self.dim, scalar * self.matrix, self.label)

    __rmul__ = __mul__

    def __neg__(self) -> "FockOperator":
        return FockOperator(self.dim, -self.matrix, f"-{self.label}")

    def dagger(self) -> "FockOperator":
        return FockOperator(self.dim, self.matrix.conj().T, f"{self.label}^dag")

    def commutator(self, other: "FockOperator") -> "FockOperator":
        return self @ other - other @ self

    def expectation(self, state: np.ndarray) -> complex:
        return complex(np.vdot(state, self.matrix @ state))

    def is_hermitian(self, atol: float = 1e-12) -> bool:
        return bool(np.allclose(self.matrix, self.matrix.conj().T, atol=atol))


def _check_dim(dim: int) -> None:
    if dim < 2:
        raise DomainError("Fock truncation needs at least two levels", dim=dim)


def identity(dim: int) -> FockOperator:
    return FockOperator(dim, np.eye(dim, dtype=complex), "1")


def annihilation(dim: int) -> FockOperator:
    _check_dim(dim)
    return FockOperator(dim, np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1), "a")


def creation(dim: int) -> FockOperator:
    _check_dim(dim)
    return FockOperator(dim, np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=-1), "a^dag")


def number(dim: int) -> FockOperator:
    _check_dim(dim)
    return FockOperator(dim, np.diag(np.arange(dim, dtype=float)), "n")


def basis_state(dim: int, level: int) -> np.ndarray:
    if not 0 <= level < dim:
        raise ShapeError(f"Level {level} outside truncation {dim}")
    psi = np.zeros(dim, dtype=complex)
    psi[level] = 1.0
    return psi


def phase_operator(dim: int, Z0: float) -> FockOperator:
    """Flux operator sqrt(hbar Z0 / 2)(a^dag + a) in Wb, Z0 in Ohm."""
    a = annihilation(dim)
    return math.sqrt(hbar * Z0 / 2.0) * (a.dagger() + a)


def charge_operator(dim: int, Z0: float) -> FockOperator:
    """Charge operator i sqrt(hbar / (2 Z0))(a^dag - a) in C."""
    a = annihilation(dim)
    return 1j * math.sqrt(hbar / (2.0 * Z0)) * (a.dagger() - a)


# -----------------------------------------------------------------------------
# Pauli operators and two-level truncation
# -----------------------------------------------------------------------------
_PAULI: Dict[str, np.ndarray] = {
    "0": np.eye(2, dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, 1j], [-1j, 0]], dtype=complex),
    "z": np.array([[-1, 0], [0, 1]], dtype=complex),
    "+": np.array([[0, 0], [1, 0]], dtype=complex),
    "-": np.array([[0, 1], [0, 0]], dtype=complex),
}


@dataclass(frozen=True, eq=False)
class PauliOperator:
    which: str
    matrix: np.ndarray


def pauli(which: str) -> PauliOperator:
    try:
        return PauliOperator(which, _PAULI[which].copy())
    except KeyError:
        raise DomainError(f"Unknown Pauli operator {which!r}") from None


def sigma(which: str) -> FockOperator:
    """Pauli matrix as a 2-level FockOperator, for building composite Hamiltonians."""
    return FockOperator(2, pauli(which).matrix, f"s{which}")


def two_level_truncate(op: FockOperator, tol: float = 1e-12) -> Dict[str, complex]:
    """
    Project op onto its lowest two levels and decompose into (sigma_0, sigma_x, sigma_y, sigma_z).
    Returns the nonzero coefficients, keyed by '0', 'x', 'y', 'z'.
    """
    block = op.matrix[:2, :2]
    coeffs: Dict[str, complex] = {}
    for key in ("0", "x", "y", "z"):
        c = complex(np.trace(_PAULI[key] @ block) / 2.0)
        if abs(c) > tol:
            coeffs[key] = c
    return coeffs


# -----------------------------------------------------------------------------
# Composite spaces
# -----------------------------------------------------------------------------
@dataclass(frozen=True)
class CompositeSpace:
    factors: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(int(f) for f in self.factors))
        if not self.factors or any(f < 1 for f in self.factors):
            raise ShapeError(f"Invalid factor dims {self.factors}")

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.factors))

    def flatten(self, levels: Sequence[int]) -> int:
        return int(np.ravel_multi_index(tuple(levels), self.factors))

    def unflatten(self, index: int) -> Tuple[int, ...]:
        return tuple(int(i) for i in np.unravel_index(index, self.factors))

    def product_state(self, levels: Sequence[int]) -> np.ndarray:
        psi = np.zeros(self.total_dim, dtype=complex)
        psi[self.flatten(levels)] = 1.0
        return psi


def kron(*ops: FockOperator) -> FockOperator:
    matrix = reduce(np.kron, (op.matrix for op in ops))
    return FockOperator(matrix.shape[0], matrix, "*".join(op.label for op in ops))


def tensor_embed(op: FockOperator, space: CompositeSpace, slot: int) -> FockOperator:
    if not 0 <= slot < len(space.factors):
        raise ShapeError(f"Slot {slot} outside space with {len(space.factors)} factors")
    if op.dim != space.factors[slot]:
        raise ShapeError(f"Operator dim {op.dim} does not match factor {slot} of size {space.factors[slot]}")
    parts = [op if i == slot else identity(d) for i, d in enumerate(space.factors)]
    embedded = kron(*parts)
    return FockOperator(embedded.dim, embedded.matrix, f"{op.label}@{slot}")


def embed_all(space: CompositeSpace, ops: Iterable[Tuple[int, FockOperator]]) -> FockOperator:
    """Product of several embedded operators, e.g. sigma_+ on slot 0 times a on slot 2."""
    result = identity(space.total_dim)
    for slot, op in ops:
        result = result @ tensor_embed(op, space, slot)
    return result


def matrix_exponential(op: FockOperator, scale: Number = 1.0) -> FockOperator:
    """exp(scale * op) by scaling and squaring."""
    cap = get_settings().expm_dim_cap
    if op.dim > cap:
        raise ResourceError(f"Matrix exponential of dim {op.dim} exceeds cap {cap}", dim=op.dim, cap=cap)
    return FockOperator(op.dim, scipy.linalg.expm(scale * op.matrix), f"exp({op.label})")
