# src/core/errors.py
from __future__ import annotations

from typing import Any, Dict, Optional


class CircuitError(Exception):
    """
    Base class for every error the library raises on purpose.
    kind is a stable machine-readable tag; exit_code is what the CLI returns.
    """
    kind: str = "circuit_error"
    exit_code: int = 1

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.message = message
        self.details: Dict[str, Any] = details

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "message": self.message, "details": dict(self.details)}


class ConfigurationError(CircuitError):
    kind = "configuration_error"
    exit_code = 2


class DomainError(CircuitError, ValueError):
    kind = "domain_error"


class NetlistSyntaxError(CircuitError):
    kind = "netlist_syntax_error"

    def __init__(self, message: str, line: int, column: int = 1, **details: Any):
        super().__init__(f"line {line}, column {column}: {message}", line=line, column=column, **details)
        self.line = line
        self.column = column


class TopologyError(CircuitError):
    kind = "topology_error"


class UnsupportedTopologyError(TopologyError):
    kind = "unsupported_topology"


class StructureError(CircuitError):
    kind = "structure_error"


class ReductionRequiredError(StructureError):
    kind = "reduction_required"


class DoubleWellError(DomainError):
    kind = "double_well"


class MultivaluedPotentialError(DomainError):
    kind = "multivalued_potential"


class NearResonanceError(DomainError):
    kind = "near_resonance"


class ShapeError(CircuitError, ValueError):
    kind = "shape_error"


class ResourceError(CircuitError):
    kind = "resource_error"


class EmptyResultError(CircuitError):
    kind = "empty_result"


def error_payload(exc: BaseException, schema_version: Optional[str] = None) -> Dict[str, Any]:
    """Flatten any exception into the dict the CLI prints on stderr."""
    if isinstance(exc, CircuitError):
        payload = exc.to_dict()
    else:
        payload = {"kind": "internal_error", "message": str(exc), "details": {}}
    if schema_version is not None:
        payload["schema_version"] = schema_version
    return payload
