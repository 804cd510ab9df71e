#!/usr/bin/python
import argparse
import json
import logging
import os
import sys
from typing import Optional, Sequence

from dotenv import load_dotenv
from pydantic import ValidationError

from src.core import runtime
from src.core.dissipation import BathSpec
from src.core.errors import CircuitError, ConfigurationError, error_payload
from src.core.schemas import SCHEMA_VERSION, ErrorReport, GridDocument
from src.core.settings import SolverSettings, set_settings

load_dotenv()

# Logging setup (stderr; stdout carries the data)
LOG_LEVEL = os.environ.get("LOG_LEVEL", "INFO").upper()
logging.basicConfig(
    level=getattr(logging, LOG_LEVEL, logging.INFO),
    format="%(asctime)s %(levelname)s %(name)s: %(message)s"
)
logger = logging.getLogger(__name__)

# Inject the design cases (coupler presets live under examples/)
from src.examples.coupler import CASES

SUBCOMMANDS = ("analyze", "sweep", "tables", "grid", "gate-sim", "readout", "t1", "explain-reduction")


def _env_bool(name: str, default: bool = False) -> bool:
    v = os.environ.get(name)
    if v is None:
        return default
    v = v.strip().lower()
    return v in ("1", "true", "t", "yes", "y", "on")


# Print a traceback next to the JSON error report
DEBUG_ERRORS = _env_bool("CIRCUIT_DEBUG", default=False)


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; keep that but report through our JSON channel."""

    def error(self, message):
        raise ConfigurationError(message)


def _common(p: argparse.ArgumentParser, case: bool = True, fmt: str = "json") -> None:
    if case:
        p.add_argument("--case", default="k1", help=f"design case ({', '.join(sorted(CASES))})")
        p.add_argument("--param", action="append", metavar="NAME=VALUE",
                       help="override a case parameter (GHz, fF, nH)")
    p.add_argument("--format", default=fmt, choices=runtime.FORMATS)
    p.add_argument("--out", help="write to a file instead of stdout")
    p.add_argument("--jobs", type=int, help="worker threads for sweeps")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="circuitq", description="Quantize lumped superconducting circuits.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("analyze", help="spectrum and couplings at one flux point")
    p.add_argument("netlist", nargs="?", help="netlist file; defaults to the case netlist")
    p.add_argument("--netlist", dest="netlist_opt", help="netlist file")
    p.add_argument("--flux", action="append", metavar="NAME=VALUE", help="loop flux in units of Phi0")
    p.add_argument("--qubit", help="variable to label as the qubit")
    p.add_argument("--resonator", help="variable to label as the resonator")
    _common(p)

    p = sub.add_parser("explain-reduction", help="show how superfluous variables are removed")
    p.add_argument("netlist", nargs="?")
    p.add_argument("--netlist", dest="netlist_opt")
    _common(p)

    p = sub.add_parser("sweep", help="flux sweep of a design case")
    p.add_argument("--axis", default="phi_x", choices=("phi_x", "phi_Xb", "both"))
    p.add_argument("--points", type=int, default=201)
    p.add_argument("--start", type=float, default=0.0)
    p.add_argument("--stop", type=float)
    p.add_argument("--phi-x", dest="phi_x", type=float, default=0.0, help="fixed phi_x (rad) for phi_Xb sweeps")
    p.add_argument("--phi-Xb", dest="phi_Xb", type=float, default=0.0, help="fixed phi_Xb (rad) for phi_x sweeps")
    p.add_argument("--netlist", dest="netlist_opt", help="netlist for the numeric pipeline")
    _common(p, fmt="csv")

    p = sub.add_parser("tables", help="computed values against the reference targets")
    p.add_argument("--points", type=int, default=201)
    _common(p)

    p = sub.add_parser("grid", help="multi-block capacitance and coupled-resonator parameters")
    p.add_argument("document", help="grid JSON document")
    _common(p, case=False)

    p = sub.add_parser("gate-sim", help="controlled-phase sequence on two blocks")
    p.add_argument("--amplitudes", nargs=4, type=complex, default=[0.5, 0.5, 0.5, 0.5],
                   metavar=("A00", "A01", "A10", "A11"), help="qubit input state (python complex literals)")
    p.add_argument("--dims", nargs=4, type=int, default=[2, 4, 4, 2], metavar=("Q1", "R1", "R2", "Q2"))
    _common(p, case=False)

    p = sub.add_parser("readout", help="cavity displacement traces, static and modulated")
    p.add_argument("--omega-r", dest="omega_r", type=float, help="resonator frequency (GHz)")
    p.add_argument("--g-zx", dest="g_zx", type=float, help="longitudinal coupling (GHz)")
    p.add_argument("--g-tilde", dest="g_tilde", type=float, help="modulation amplitude (GHz)")
    p.add_argument("--kappa", type=float, default=1e-3, help="linewidth (GHz)")
    p.add_argument("--t-final", dest="t_final", type=float, default=5000.0, help="duration (ns)")
    p.add_argument("--points", type=int, default=401)
    p.add_argument("--phi-x", dest="phi_x", type=float, help="operating point (rad), default k pi/2")
    _common(p, fmt="csv")

    p = sub.add_parser("t1", help="relaxation and dephasing from an impedance bath")
    p.add_argument("--Cg", type=float, help="coupling capacitance to the port (fF)")
    p.add_argument("--R", type=float, default=50.0, help="bath resistance (Ohm)")
    p.add_argument("--CZ", type=float, default=1e4, help="bath series capacitance (fF)")
    p.add_argument("--temperature", type=float, help="bath temperature (K)")
    p.add_argument("--phi-x", dest="phi_x", type=float, default=0.0)
    _common(p)
    return parser


def _netlist_text(args, case) -> str:
    path = getattr(args, "netlist", None) or getattr(args, "netlist_opt", None)
    return runtime.read_text(path) if path else case.netlist(case.params)


def _dispatch(args) -> str:
    cmd = args.command
    if cmd == "grid":
        doc = GridDocument.model_validate(json.loads(runtime.read_text(args.document)))
        return runtime.render(runtime.grid(doc, CASES), args.format)
    if cmd == "gate-sim":
        return runtime.render(runtime.gate_sim(args.amplitudes, tuple(args.dims)), args.format)

    case = runtime.resolve_case(CASES, args.case, runtime.parse_assignments(args.param, "--param"))
    if cmd == "analyze":
        flux = runtime.parse_assignments(args.flux, "--flux")
        return runtime.render(runtime.analyze(_netlist_text(args, case), flux, args.qubit, args.resonator),
                              args.format)
    if cmd == "explain-reduction":
        return runtime.render(runtime.explain_reduction(_netlist_text(args, case)), args.format)
    if cmd == "sweep":
        netlist = runtime.read_text(args.netlist_opt) if args.netlist_opt else None
        result = runtime.sweep(case, args.axis, args.points, args.start, args.stop, args.jobs, netlist,
                               args.phi_x, args.phi_Xb)
        logger.info("sweep %s: %d rows, %d failed", case.name, len(result.rows), result.failures)
        return runtime.render(result, args.format)
    if cmd == "tables":
        return runtime.render(runtime.tables(case, args.points, args.jobs), args.format)
    if cmd == "readout":
        omega_r, g_zx = runtime.readout_operating_point(case, args.phi_x)
        omega_r = args.omega_r if args.omega_r is not None else omega_r
        g_zx = args.g_zx if args.g_zx is not None else g_zx
        if args.format != "csv":
            raise ConfigurationError("readout writes CSV only", allowed=["csv"])
        return runtime.readout(omega_r, g_zx, args.kappa, args.t_final, args.points, args.g_tilde)
    if cmd == "t1":
        bath = BathSpec(R=args.R, C_Z=args.CZ, T=args.temperature)
        return runtime.render(runtime.t1(case, bath, args.phi_x, args.Cg), args.format)
    raise ConfigurationError(f"Unknown command {cmd!r}", allowed=list(SUBCOMMANDS))


def _report(exc: BaseException, exit_code: int) -> int:
    payload = error_payload(exc, SCHEMA_VERSION)
    report = ErrorReport(kind=payload["kind"], message=payload["message"], details=payload.get("details", {}))
    sys.stderr.write(json.dumps(report.model_dump(), default=str) + "\n")
    if DEBUG_ERRORS:
        logger.exception("command failed")
    return exit_code


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if not args.command:
            raise ConfigurationError("A subcommand is required", allowed=list(SUBCOMMANDS))
        settings = SolverSettings.from_env()
        if getattr(args, "jobs", None):
            settings = settings.with_overrides(jobs=args.jobs)
        set_settings(settings)
        logger.info("%s: starting", args.command)
        runtime.emit(_dispatch(args), args.out, sys.stdout)
        return 0
    except CircuitError as exc:
        return _report(exc, exc.exit_code)
    except ValidationError as exc:
        return _report(ConfigurationError("Invalid input document", errors=json.loads(exc.json())), 2)
    except json.JSONDecodeError as exc:
        return _report(ConfigurationError(f"Malformed JSON: {exc.msg}", line=exc.lineno), 2)


if __name__ == "__main__":
    sys.exit(main())
