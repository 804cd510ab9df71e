# src/core/sweep.py
"""
Flux sweeps over a design case, design-table reproduction and CSV/JSON output.

Numeric points are computed in contiguous chunks of fixed size; inside a chunk
each minimum seeds the next one. The chunk size never depends on the worker
count, so results are identical for any number of jobs.
"""
from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, TextIO, Tuple

import numpy as np

from . import __version__
from .design_protocol import DesignCase
from .errors import ConfigurationError, DomainError, EmptyResultError
from .lagrangian import EnergyModel, build_energy_model
from .models import CouplerParams, TableTarget
from .netlist import parse
from .reduce import ReductionReport, eliminate_massless_or_potential_free
from .schemas import SweepDocument, SweepRowModel, TableDocument, TableRowModel
from .settings import get_settings
from .spectrum import (
    CLOSED_FORM,
    NUMERIC,
    analyze_point,
    couplings_closed_form,
    design_limits,
    qubit_spectrum_closed_form,
    resonator_spectrum_closed_form,
)

logger = logging.getLogger(__name__)

AXES = ("phi_x", "phi_Xb", "both")
METHODS = (CLOSED_FORM, NUMERIC)

# CSV column order; frequencies and couplings in GHz, phases in rad, anharmonicities as fractions
COLUMNS = (
    "phi_x", "phi_Xb", "method", "well_ok",
    "Delta", "omega_r", "alpha_rel_q", "alpha_rel_r",
    "g_xx", "g_zx", "g_xz", "g_zz", "error",
)


# -----------------------------------------------------------------------------
# Sweep requests and rows
# -----------------------------------------------------------------------------
@dataclass(frozen=True)
class SweepSpec:
    case: str
    params: CouplerParams
    # None runs the closed forms only
    netlist: Optional[str] = None
    axis: str = "phi_x"
    points: int = 201
    start: float = 0.0
    # default 2 k pi for phi_x, 2 pi for phi_Xb
    stop: Optional[float] = None
    # fixed values of the axis not swept (rad)
    phi_x: float = 0.0
    phi_Xb: float = 0.0
    methods: Tuple[str, ...] = METHODS
    qubit: str = "phi_q"
    resonator: str = "phi_r"
    jobs: Optional[int] = None

    def __post_init__(self):
        if self.axis not in AXES:
            raise ConfigurationError(f"Unknown sweep axis {self.axis!r}", allowed=list(AXES))
        if self.points < 2:
            raise ConfigurationError("A sweep needs at least two points", points=self.points)
        unknown = sorted(set(self.methods) - set(METHODS))
        if unknown or not self.methods:
            raise ConfigurationError(f"Unknown method(s): {unknown}", allowed=list(METHODS))
        limit = 2.0 * self.params.k * math.pi * (1.0 + 1e-12)
        if abs(self.start) > limit or abs(self.stop_value) > limit:
            raise ConfigurationError("Sweep range must stay within +/- 2 k pi",
                                     start=self.start, stop=self.stop_value, k=self.params.k)

    @property
    def stop_value(self) -> float:
        if self.stop is not None:
            return self.stop
        return 2.0 * math.pi * (self.params.k if self.axis != "phi_Xb" else 1)

    def axis_values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop_value, self.points)

    def segments(self) -> List[List[Tuple[float, float]]]:
        """(phi_x, phi_Xb) points, one list per continuation segment."""
        values = [float(v) for v in self.axis_values()]
        if self.axis == "phi_x":
            return [[(v, self.phi_Xb) for v in values]]
        if self.axis == "phi_Xb":
            return [[(self.phi_x, v) for v in values]]
        return [[(v, bias) for v in values] for bias in (0.0, math.pi)]


@dataclass(frozen=True)
class SweepRow:
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

    @classmethod
    def failed(cls, phi_x: float, phi_Xb: float, method: str, exc: Exception) -> "SweepRow":
        kind = getattr(exc, "kind", type(exc).__name__)
        return cls(phi_x=phi_x, phi_Xb=phi_Xb, method=method, well_ok=False, error=f"{kind}: {exc}")

    def value(self, name: str) -> float:
        v = getattr(self, name)
        return math.nan if v is None else float(v)

    def csv_values(self) -> List[str]:
        out = []
        for name in COLUMNS:
            v = getattr(self, name)
            if v is None:
                out.append("")
            elif isinstance(v, bool):
                out.append("true" if v else "false")
            elif isinstance(v, float):
                out.append(format(v, ".12g"))
            else:
                out.append(str(v))
        return out


def _closed_row(params: CouplerParams, phi_x: float, phi_Xb: float) -> SweepRow:
    try:
        q = qubit_spectrum_closed_form(params, phi_x, phi_Xb)
        r = resonator_spectrum_closed_form(params, phi_x)
        g = couplings_closed_form(params, phi_x, phi_Xb)
    except DomainError as exc:
        logger.debug("sweep: closed form failed at phi_x=%.6g phi_Xb=%.6g: %s", phi_x, phi_Xb, exc)
        return SweepRow.failed(phi_x, phi_Xb, CLOSED_FORM, exc)
    return SweepRow(phi_x=phi_x, phi_Xb=phi_Xb, method=CLOSED_FORM, well_ok=True, Delta=q.Delta,
                    omega_r=r.frequency, alpha_rel_q=q.alpha_rel, alpha_rel_r=r.alpha_rel,
                    g_xx=g.g_xx, g_zx=g.g_zx, g_xz=g.g_xz, g_zz=g.g_zz)


def flux_map_for(model: EnergyModel, phi_x: float, phi_Xb: float) -> Dict[str, float]:
    """Phases in rad to the Phi0 fractions of the symbols the model knows."""
    values = {"phi_x": phi_x / (2.0 * math.pi), "phi_Xb": phi_Xb / (2.0 * math.pi)}
    return {s: v for s, v in values.items() if s in model.flux_symbols}


def _numeric_chunk(model: EnergyModel, qubit: str, resonator: str,
                   points: Sequence[Tuple[float, float]]) -> List[SweepRow]:
    rows: List[SweepRow] = []
    start = None
    for phi_x, phi_Xb in points:
        try:
            pa = analyze_point(model, flux_map_for(model, phi_x, phi_Xb), qubit, resonator, start)
        except DomainError as exc:
            logger.debug("sweep: numeric point failed at phi_x=%.6g phi_Xb=%.6g: %s", phi_x, phi_Xb, exc)
            rows.append(SweepRow.failed(phi_x, phi_Xb, NUMERIC, exc))
            start = None
            continue
        start = pa.op.phi_min
        q, r, g = pa.modes[qubit], pa.modes[resonator], pa.couplings
        rows.append(SweepRow(phi_x=phi_x, phi_Xb=phi_Xb, method=NUMERIC, well_ok=pa.op.well_ok, Delta=q.Delta,
                             omega_r=r.frequency, alpha_rel_q=q.alpha_rel, alpha_rel_r=r.alpha_rel,
                             g_xx=g.g_xx, g_zx=g.g_zx, g_xz=g.g_xz, g_zz=g.g_zz))
    return rows


def build_case_model(netlist: str) -> Tuple[EnergyModel, ReductionReport]:
    """Parse, build and reduce; the model every numeric point of a case is evaluated on."""
    return eliminate_massless_or_potential_free(build_energy_model(parse(netlist)))


def _chunks(points: Sequence[Tuple[float, float]], size: int) -> List[Sequence[Tuple[float, float]]]:
    return [points[i:i + size] for i in range(0, len(points), size)]


# -----------------------------------------------------------------------------
# Result
# -----------------------------------------------------------------------------
@dataclass(eq=False)
class SweepResult:
    spec: SweepSpec
    rows: List[SweepRow]
    notes: List[str] = field(default_factory=list)
    metadata: Dict[str, Any] = field(default_factory=dict)

    def rows_for(self, method: str, phi_Xb: Optional[float] = None) -> List[SweepRow]:
        return [r for r in self.rows if r.method == method and (phi_Xb is None or r.phi_Xb == phi_Xb)]

    def column(self, name: str, method: str, phi_Xb: Optional[float] = None) -> np.ndarray:
        return np.array([r.value(name) for r in self.rows_for(method, phi_Xb)])

    def abs_max(self, name: str, method: str, phi_Xb: Optional[float] = None) -> float:
        values = np.abs(self.column(name, method, phi_Xb))
        return float(np.nanmax(values)) if np.any(np.isfinite(values)) else math.nan

    @property
    def failures(self) -> int:
        return sum(1 for r in self.rows if not r.well_ok)

    def write_csv(self, stream: TextIO) -> None:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(COLUMNS)
        for row in self.rows:
            writer.writerow(row.csv_values())

    def to_csv(self) -> str:
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()

    def to_document(self) -> SweepDocument:
        return SweepDocument(
            case=self.spec.case, axis=self.spec.axis, parameters=dict(self.spec.params.as_dict()),
            columns=list(COLUMNS),
            rows=[SweepRowModel(**{name: getattr(r, name) for name in COLUMNS}) for r in self.rows],
            notes=list(self.notes),
        )

    def save(self, path: Path, fmt: str = "csv") -> None:
        path = Path(path)
        if fmt == "csv":
            with path.open("w", newline="", encoding="utf-8") as fh:
                self.write_csv(fh)
        elif fmt == "json":
            path.write_text(self.to_document().model_dump_json(indent=2), encoding="utf-8")
        else:
            raise ConfigurationError(f"Unknown output format {fmt!r}", allowed=["csv", "json"])


def run_sweep(spec: SweepSpec) -> SweepResult:
    """
    Closed-form and numeric-minimum rows for every point; each point's rows are
    adjacent, closed form first. Failed points stay in the result with well_ok false.
    """
    settings = get_settings()
    segments = spec.segments()
    notes: List[str] = []
    per_point: List[List[SweepRow]] = [[] for seg in segments for _ in seg]

    if CLOSED_FORM in spec.methods:
        if spec.params.has_added_inductance:
            notes.append("closed forms describe the plain coupler; skipped for the added-inductance circuit")
        else:
            i = 0
            for seg in segments:
                for phi_x, phi_Xb in seg:
                    per_point[i].append(_closed_row(spec.params, phi_x, phi_Xb))
                    i += 1

    if NUMERIC in spec.methods:
        if spec.netlist is None:
            notes.append("no netlist; numeric rows skipped")
        else:
            model, _ = build_case_model(spec.netlist)
            chunks = [c for seg in segments for c in _chunks(seg, settings.chunk_size)]
            jobs = max(1, spec.jobs or settings.jobs)
            worker = partial(_numeric_chunk, model, spec.qubit, spec.resonator)
            if jobs == 1:
                results = [worker(c) for c in chunks]
            else:
                with ThreadPoolExecutor(max_workers=jobs) as pool:
                    results = list(pool.map(worker, chunks))
            flat = [row for chunk in results for row in chunk]
            for i, row in enumerate(flat):
                per_point[i].append(row)

    rows = [row for point in per_point for row in point]
    if not rows or all(not r.well_ok for r in rows):
        raise EmptyResultError("Every sweep point failed", case=spec.case, points=spec.points)
    result = SweepResult(spec=spec, rows=rows, notes=notes, metadata={
        "case": spec.case, "axis": spec.axis, "points": spec.points,
        "parameters": spec.params.as_dict(), "version": __version__,
    })
    logger.info("sweep %s: %d rows, %d failed", spec.case, len(rows), result.failures)
    return result


# -----------------------------------------------------------------------------
# Design tables
# -----------------------------------------------------------------------------
@dataclass(eq=False)
class TableReport:
    case: str
    params: CouplerParams
    computed: Dict[str, Optional[float]]
    rows: List[Tuple[TableTarget, Optional[float], bool]]

    @property
    def all_passed(self) -> bool:
        return all(passed for _, _, passed in self.rows)

    def to_document(self) -> TableDocument:
        return TableDocument(
            case=self.case, parameters=self.params.as_dict(), all_passed=self.all_passed,
            rows=[TableRowModel(key=t.key, label=t.label, unit=t.unit, computed=value, target=t.describe(),
                                passed=passed) for t, value, passed in self.rows],
        )


def _point(model: EnergyModel, phi_x: float, phi_Xb: float):
    return analyze_point(model, flux_map_for(model, phi_x, phi_Xb), "phi_q", "phi_r")


def flux_bias_boost(sweep: SweepResult) -> Optional[float]:
    """max |g_zx| over the phi_Xb = pi sweep divided by the max over the phi_Xb = 0 sweep."""
    at_zero = sweep.abs_max("g_zx", NUMERIC, 0.0)
    at_pi = sweep.abs_max("g_zx", NUMERIC, math.pi)
    if not (math.isfinite(at_zero) and math.isfinite(at_pi)) or at_zero == 0.0:
        return None
    return at_pi / at_zero


def table_values(case: DesignCase, points: int = 201, jobs: Optional[int] = None) -> Dict[str, Optional[float]]:
    """
    Every quantity the design tables refer to, in table units (GHz, MHz, %, nH).
    Bands and the g_zx, g_xz maxima come from the phi_Xb = 0 sweep; g_xx and g_zz
    are read at phi_x = 0, where both peak.
    """
    p = case.params
    netlist = case.netlist(p)
    keys = {t.key for t in case.targets}
    axis = "both" if keys & {"boost", "Delta_pi"} else "phi_x"
    sweep = run_sweep(SweepSpec(case=case.name, params=p, netlist=netlist, points=points, axis=axis,
                                methods=(NUMERIC,), jobs=jobs))
    model, _ = build_case_model(netlist)
    values: Dict[str, Optional[float]] = {}

    def finite(xs: np.ndarray) -> np.ndarray:
        return xs[np.isfinite(xs)]

    omega_r = finite(sweep.column("omega_r", NUMERIC, 0.0))
    delta = finite(sweep.column("Delta", NUMERIC, 0.0))
    aq = finite(np.abs(sweep.column("alpha_rel_q", NUMERIC, 0.0))) * 100.0
    ar = finite(np.abs(sweep.column("alpha_rel_r", NUMERIC, 0.0))) * 100.0
    for key, xs, fn in (("omega_r_min", omega_r, np.min), ("omega_r_max", omega_r, np.max),
                        ("Delta_min", delta, np.min), ("Delta_max", delta, np.max),
                        ("alpha_rel_q_min", aq, np.min), ("alpha_rel_q_max", aq, np.max),
                        ("alpha_rel_r_max", ar, np.max)):
        values[key] = float(fn(xs)) if xs.size else None

    for key in ("g_zx", "g_xz"):
        peak = sweep.abs_max(key, NUMERIC, 0.0)
        values[f"{key}_max"] = peak * 1e3 if math.isfinite(peak) else None
    zero = _point(model, 0.0, 0.0).couplings
    values["g_xx_max"] = abs(zero.g_xx) * 1e3
    values["g_zz_max"] = abs(zero.g_zz) * 1e3

    if keys & {"L_max", "L_crit", "k_crit"}:
        limits = design_limits(p)
        values.update(L_max=limits.L_max, L_crit=limits.L_crit, k_crit=limits.k_crit)
    if axis == "both":
        values["boost"] = flux_bias_boost(sweep)
        try:
            values["Delta_pi"] = _point(model, p.k * math.pi / 2.0, math.pi).modes["phi_q"].Delta
        except DomainError as exc:
            logger.warning("tables: flux-bias point failed: %s", exc)
            values["Delta_pi"] = None
    return values


def table_report(case: DesignCase, points: int = 201, jobs: Optional[int] = None) -> TableReport:
    computed = table_values(case, points, jobs)
    rows = []
    for target in case.targets:
        value = computed.get(target.key)
        rows.append((target, value, target.check(value)))
    report = TableReport(case=case.name, params=case.params, computed=computed, rows=rows)
    logger.info("tables %s: %d/%d rows within tolerance", case.name,
                sum(1 for _, _, ok in rows if ok), len(rows))
    return report


def write_rows(rows: Iterable[Sequence[Any]], header: Sequence[str], stream: TextIO) -> None:
    """Plain CSV with the same float formatting as sweeps."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format(v, ".12g") if isinstance(v, float) else v for v in row])
