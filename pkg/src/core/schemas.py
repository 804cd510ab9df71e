# src/core/schemas.py
"""
pydantic documents for everything the CLI reads or writes as JSON.
Every output document carries schema_version.
"""
from __future__ import annotations

from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

SCHEMA_VERSION = "1.0"


class Document(BaseModel):
    model_config = ConfigDict(extra="forbid")

    schema_version: str = SCHEMA_VERSION


class ErrorReport(Document):
    kind: str
    message: str
    details: Dict[str, Any] = Field(default_factory=dict)


# -----------------------------------------------------------------------------
# Grid input
# -----------------------------------------------------------------------------
class GridBlock(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str
    # a built-in case to start from; params override its fields
    preset: Optional[str] = None
    params: Dict[str, float] = Field(default_factory=dict)


class GridLink(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str
    blocks: Tuple[str, str]
    # None fuses the coupling nodes of the two blocks
    Cb: Optional[float] = None

    @field_validator("blocks")
    @classmethod
    def _distinct(cls, v: Tuple[str, str]) -> Tuple[str, str]:
        if v[0] == v[1]:
            raise ValueError("a link joins two different blocks")
        return v

    @field_validator("Cb")
    @classmethod
    def _non_negative(cls, v: Optional[float]) -> Optional[float]:
        if v is not None and v < 0:
            raise ValueError("Cb must not be negative")
        return v


class GridDocument(Document):
    blocks: List[GridBlock]
    links: List[GridLink]
    # phi_x per block, radians
    phi_x: Dict[str, float] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _references(self) -> "GridDocument":
        names = [b.name for b in self.blocks]
        if len(set(names)) != len(names):
            raise ValueError("block names must be unique")
        link_names = [link.name for link in self.links]
        if len(set(link_names)) != len(link_names):
            raise ValueError("link names must be unique")
        known = set(names)
        for link in self.links:
            missing = [b for b in link.blocks if b not in known]
            if missing:
                raise ValueError(f"link {link.name} refers to unknown block(s) {missing}")
        for b in self.phi_x:
            if b not in known:
                raise ValueError(f"phi_x given for unknown block {b}")
        return self


# -----------------------------------------------------------------------------
# Outputs
# -----------------------------------------------------------------------------
class SweepRowModel(BaseModel):
    phi_x: float
    phi_Xb: float
    method: str
    well_ok: bool
    Delta: Optional[float] = None
    omega_r: Optional[float] = None
    alpha_rel_q: Optional[float] = None
    alpha_rel_r: Optional[float] = None
    g_xx: Optional[float] = None
    g_zx: Optional[float] = None
    g_xz: Optional[float] = None
    g_zz: Optional[float] = None
    error: Optional[str] = None


class SweepDocument(Document):
    case: str
    axis: str
    parameters: Dict[str, float]
    columns: List[str]
    rows: List[SweepRowModel]
    notes: List[str] = Field(default_factory=list)


class TableRowModel(BaseModel):
    key: str
    label: str
    unit: str
    computed: Optional[float]
    target: str
    passed: bool


class TableDocument(Document):
    case: str
    parameters: Dict[str, float]
    rows: List[TableRowModel]
    all_passed: bool


class ModeModel(BaseModel):
    name: str
    frequency: float
    Z0: float
    phi_zpf: float
    alpha: float
    alpha_rel: float
    E_C: float = 0.0
    stiffness: float = 0.0
    Delta: Optional[float] = None


class AnalyzeDocument(Document):
    flux_map: Dict[str, float]
    phi_min: List[float]
    variables: List[str]
    modes: Dict[str, ModeModel]
    couplings: Dict[str, Any]
    normal_modes: List[float] = Field(default_factory=list)
    reduction: Dict[str, Any] = Field(default_factory=dict)
    warnings: List[str] = Field(default_factory=list)


class ReductionDocument(Document):
    variables: List[str]
    eliminated: List[str]
    kept_unchanged: List[str]
    folded: List[str]
    transform: List[List[float]]
    transformed_cmat_fF: Optional[List[List[float]]] = None
    steps: List[Dict[str, Any]] = Field(default_factory=list)
    # reduced model: variables, kinetic matrix and potential terms
    reduced_variables: List[str] = Field(default_factory=list)
    reduced_cmat_fF: List[List[float]] = Field(default_factory=list)
    terms: List[Dict[str, Any]] = Field(default_factory=list)
    warnings: List[str] = Field(default_factory=list)


class LinkModel(BaseModel):
    name: str
    blocks: Tuple[str, str]
    C_gmu: float
    C_bmu: float
    C_mu: float
    C_tilde: List[List[float]]
    f_r1: float
    f_r2: float
    Z_r1: float
    Z_r2: float
    g_c: float
    omega_plus: float
    omega_minus: float


class GridResultDocument(Document):
    variables: List[str]
    cmat: List[List[float]]
    is_local: bool
    links: List[LinkModel]
    qubits: Dict[str, ModeModel]


class GateDocument(Document):
    dims: List[int]
    input: List[List[float]]
    output: List[List[float]]
    fidelity: float
    leakage: float


class DecoherenceDocument(Document):
    mode: str
    frequency_ghz: float
    T1: Optional[float]
    T2: Optional[float]
    Tphi: Optional[float]
    kappa: Optional[float] = None
    t1_closed_form: Optional[float] = None
    qubit: Dict[str, Optional[float]] = Field(default_factory=dict)
    notes: List[str] = Field(default_factory=list)
