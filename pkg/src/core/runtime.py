# src/core/runtime.py
"""
The engine behind each CLI subcommand. Every function takes plain values, runs
the library and returns a pydantic document (or CSV text); main.py only parses
arguments and writes output.
"""
from __future__ import annotations

import io
import logging
import math
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel

from .design_protocol import DesignCase
from .dissipation import (
    BathSpec,
    kappa_from_bath,
    langevin_displacement_modulated,
    langevin_displacement_static,
    qubit_decoherence,
    resonator_decoherence,
    resonator_mode_with_bath,
    t1_closed_form,
)
from .dynamics import phase_gate_simulate
from .errors import ConfigurationError, DoubleWellError
from .lagrangian import build_energy_model
from .models import CouplerParams, ModeSpectrum
from .multiblock import plaquette_matrices
from .netlist import parse
from .reduce import eliminate_massless_or_potential_free
from .schemas import (
    AnalyzeDocument,
    DecoherenceDocument,
    GateDocument,
    GridDocument,
    GridResultDocument,
    LinkModel,
    ModeModel,
    ReductionDocument,
    TableDocument,
)
from .spectrum import (
    analyze_point,
    couplings_closed_form,
    normal_mode_frequencies,
    qubit_spectrum_closed_form,
    resonator_spectrum_closed_form,
)
from .sweep import SweepResult, SweepSpec, run_sweep, table_report, write_rows

logger = logging.getLogger(__name__)

FORMATS = ("csv", "json")

# -----------------------------------------------------------------------------
# Input helpers
# -----------------------------------------------------------------------------

def parse_assignments(items: Optional[Iterable[str]], what: str = "value") -> Dict[str, float]:
    """NAME=VALUE pairs to a dict; malformed entries are configuration errors."""
    out: Dict[str, float] = {}
    for item in items or ():
        name, sep, raw = item.partition("=")
        name = name.strip()
        if not sep or not name:
            raise ConfigurationError(f"Expected NAME=VALUE for {what}, got {item!r}")
        try:
            out[name] = float(raw)
        except ValueError:
            raise ConfigurationError(f"Not a number for {what} {name}: {raw!r}") from None
    return out


def read_text(path: Union[str, Path]) -> str:
    p = Path(path)
    if not p.is_file():
        raise ConfigurationError(f"No such file: {p}")
    return p.read_text(encoding="utf-8")


def resolve_case(cases: Mapping[str, DesignCase], name: str,
                 overrides: Optional[Mapping[str, float]] = None) -> DesignCase:
    try:
        case = cases[name]
    except KeyError:
        raise ConfigurationError(f"Unknown case {name!r}", allowed=sorted(cases)) from None
    if overrides:
        case = case.with_params(case.params.with_overrides(overrides))
        logger.info("case %s: overrides %s", name, dict(overrides))
    return case


def _mode_model(mode: ModeSpectrum) -> ModeModel:
    return ModeModel(**mode.as_dict())


# -----------------------------------------------------------------------------
# analyze / explain-reduction
# -----------------------------------------------------------------------------

def analyze(netlist: str, flux: Optional[Mapping[str, float]] = None, qubit: Optional[str] = None,
            resonator: Optional[str] = None) -> AnalyzeDocument:
    """Single operating point of an arbitrary netlist; flux values in Phi0."""
    graph = parse(netlist)
    warnings = list(graph.warnings)
    model, report = eliminate_massless_or_potential_free(build_energy_model(graph))
    flux = dict(flux or {})
    point = analyze_point(model, flux, qubit, resonator)
    try:
        normal = [float(f) for f in normal_mode_frequencies(model, point.op)]
    except DoubleWellError as exc:
        logger.warning("analyze: normal modes unavailable: %s", exc)
        normal = []
    return AnalyzeDocument(
        flux_map=point.op.flux_map, phi_min=[float(x) for x in point.op.phi_min], variables=list(model.variables),
        modes={name: _mode_model(m) for name, m in point.modes.items()},
        couplings=point.couplings.as_dict(), normal_modes=normal,
        reduction=report.to_dict(), warnings=warnings,
    )


def explain_reduction(netlist: str) -> ReductionDocument:
    graph = parse(netlist)
    model, report = eliminate_massless_or_potential_free(build_energy_model(graph))
    data = report.to_dict()
    described = model.describe()
    return ReductionDocument(
        **data, reduced_variables=described["variables"], reduced_cmat_fF=described["cmat_fF"],
        terms=described["terms"], warnings=list(graph.warnings),
    )


# -----------------------------------------------------------------------------
# sweep / tables
# -----------------------------------------------------------------------------

def sweep(case: DesignCase, axis: str = "phi_x", points: int = 201, start: float = 0.0,
          stop: Optional[float] = None, jobs: Optional[int] = None, netlist: Optional[str] = None,
          phi_x: float = 0.0, phi_Xb: float = 0.0) -> SweepResult:
    spec = SweepSpec(case=case.name, params=case.params, netlist=netlist or case.netlist(case.params),
                     axis=axis, points=points, start=start, stop=stop, phi_x=phi_x, phi_Xb=phi_Xb, jobs=jobs)
    return run_sweep(spec)


def tables(case: DesignCase, points: int = 201, jobs: Optional[int] = None) -> TableDocument:
    return table_report(case, points, jobs).to_document()


# -----------------------------------------------------------------------------
# grid
# -----------------------------------------------------------------------------

def grid(document: GridDocument, cases: Mapping[str, DesignCase], default_case: str = "k1") -> GridResultDocument:
    blocks: Dict[str, CouplerParams] = {}
    for block in document.blocks:
        base = resolve_case(cases, block.preset or default_case)
        blocks[block.name] = base.params.with_overrides(block.params)
    links = [(link.name, link.blocks[0], link.blocks[1], link.Cb) for link in document.links]
    result = plaquette_matrices(blocks, links, document.phi_x)
    link_models = []
    for link in result.links.values():
        res = link.resonators
        link_models.append(LinkModel(
            name=link.name, blocks=link.blocks, C_gmu=link.caps.C_gmu, C_bmu=link.caps.C_bmu, C_mu=link.caps.C_mu,
            C_tilde=link.C_tilde.tolist(), f_r1=res.f_r1, f_r2=res.f_r2, Z_r1=res.Z_r1, Z_r2=res.Z_r2,
            g_c=res.g_c, omega_plus=link.dressed[0], omega_minus=link.dressed[1],
        ))
    return GridResultDocument(variables=list(result.variables), cmat=result.cmat.tolist(), is_local=result.is_local,
                              links=link_models, qubits={b: _mode_model(m) for b, m in result.qubits.items()})


# -----------------------------------------------------------------------------
# gate-sim / readout / t1
# -----------------------------------------------------------------------------

def gate_sim(amplitudes: Sequence[complex], dims: Tuple[int, int, int, int] = (2, 4, 4, 2)) -> GateDocument:
    result = phase_gate_simulate(amplitudes, dims)
    data = result.as_dict()
    return GateDocument(dims=list(dims), input=data["input"], output=data["output"],
                        fidelity=result.fidelity, leakage=result.leakage)


def readout_operating_point(case: DesignCase, phi_x: Optional[float] = None) -> Tuple[float, float]:
    """(omega_r/2pi, g_zx/2pi) in GHz from the closed forms, at phi_x = k pi/2 by default."""
    p = case.params
    phi_x = p.k * math.pi / 2.0 if phi_x is None else phi_x
    return resonator_spectrum_closed_form(p, phi_x).frequency, couplings_closed_form(p, phi_x).g_zx


def readout(omega_r: float, g_zx: float, kappa: float, t_final: float, points: int = 401,
            g_tilde: Optional[float] = None) -> str:
    """
    CSV of the cavity displacement for both qubit states. Frequencies are f = omega/2pi
    in GHz, time in ns; the modulated trace uses g_tilde (default g_zx).
    """
    if points < 2 or t_final <= 0:
        raise ConfigurationError("Need at least two points and a positive duration", points=points, t_final=t_final)
    g_tilde = g_zx if g_tilde is None else g_tilde
    w, g, gt, k = (2.0 * math.pi * x for x in (omega_r, g_zx, g_tilde, kappa))
    t = np.linspace(0.0, t_final, points)
    rows: List[List[object]] = []
    for label, fn in (("static", lambda s: langevin_displacement_static(w, g, k, t, s)),
                      ("modulated", lambda s: langevin_displacement_modulated(gt, k, t, s))):
        for s in (-1, 1):
            alpha = fn(s)
            rows.extend([[label, s, float(tt), float(a.real), float(a.imag)] for tt, a in zip(t, alpha)])
    buf = io.StringIO()
    write_rows(rows, ("trace", "qubit_state", "t_ns", "re_alpha", "im_alpha"), buf)
    return buf.getvalue()


def _finite(x: float) -> Optional[float]:
    return None if math.isinf(x) else x


def t1(case: DesignCase, bath: BathSpec, phi_x: float = 0.0, Cg: Optional[float] = None) -> DecoherenceDocument:
    p = case.params
    Cg = p.Cg if Cg is None else Cg
    times = resonator_decoherence(p, phi_x, bath, Cg)
    mode = resonator_mode_with_bath(p, phi_x, Cg)
    notes = []
    if Cg == 0:
        notes.append("Cg = 0: the resonator is decoupled from the bath")
    qubit = qubit_decoherence(p.with_overrides({"Cg": Cg}), qubit_spectrum_closed_form(p, phi_x), bath)
    kappa = kappa_from_bath(p, phi_x, bath, Cg)
    closed = t1_closed_form(p, phi_x, bath, Cg)
    return DecoherenceDocument(
        mode="resonator", frequency_ghz=mode.frequency, T1=_finite(times.T1), T2=_finite(times.T2),
        Tphi=_finite(times.Tphi), kappa=kappa, t1_closed_form=_finite(closed), qubit=qubit.as_dict(), notes=notes,
    )


# -----------------------------------------------------------------------------
# Output
# -----------------------------------------------------------------------------

def render(payload: Union[BaseModel, SweepResult, str], fmt: str = "json") -> str:
    if fmt not in FORMATS:
        raise ConfigurationError(f"Unknown output format {fmt!r}", allowed=list(FORMATS))
    if isinstance(payload, str):
        return payload
    if isinstance(payload, SweepResult):
        return payload.to_csv() if fmt == "csv" else payload.to_document().model_dump_json(indent=2) + "\n"
    if fmt == "csv":
        raise ConfigurationError("This command writes JSON only", allowed=["json"])
    return payload.model_dump_json(indent=2) + "\n"


def emit(text: str, out: Optional[Union[str, Path]], stream) -> None:
    if out is None:
        stream.write(text)
        return
    path = Path(out)
    path.write_text(text, encoding="utf-8")
    logger.info("wrote %s (%d bytes)", path, len(text))
