# src/core/design_protocol.py
from __future__ import annotations

from typing import Protocol, Sequence, runtime_checkable

from .models import CouplerParams, TableTarget


@runtime_checkable
class DesignCase(Protocol):
    """
    A built-in parameter set with the netlist it is analyzed on.

    name          short identifier used on the command line (k1, kn, add)
    description   one line for listings and table headers
    params        the preset parameters, canonical units
    targets       table rows the computed results are checked against
    """
    name: str
    description: str
    params: CouplerParams
    targets: Sequence[TableTarget]

    def netlist(self, params: CouplerParams) -> str:
        """Netlist text for params, with flux symbols phi_x and phi_Xb and variables phi_q, phi_r."""
        ...

    def with_params(self, params: CouplerParams) -> "DesignCase":
        """Same case with other parameters (for --param overrides)."""
        ...
