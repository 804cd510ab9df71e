#!/usr/bin/python
from __future__ import annotations

import logging
import os
from dataclasses import dataclass, fields, replace
from typing import Any, Dict, Optional, Tuple

from .errors import ConfigurationError

logger = logging.getLogger(__name__)

TREE_RULES = ("burkard", "devoret")


@dataclass(frozen=True)
class SolverConfig:
    # Fock truncation for single-mode checks
    fock_dim: int = 20
    # Truncation per factor in composite spaces
    composite_dim: int = 10
    # Largest matrix the exponential will accept
    expm_dim_cap: int = 4096
    # Newton stops once |grad U| drops below this (GHz/rad)
    gradient_tol: float = 1e-10
    newton_max_iter: int = 200
    # Smallest Hessian eigenvalue must exceed margin * largest
    pd_margin: float = 1e-9
    # Relative size below which a coefficient counts as absent
    zero_threshold: float = 1e-14
    # Spanning-tree convention when a netlist does not pick one
    tree_rule: str = "burkard"
    # |g / (Delta - omega_r)| above this leaves the dispersive regime
    dispersive_threshold: float = 0.1
    # Flux drive amplitude beyond which first-order expansion is flagged
    drive_linear_limit: float = 0.3
    # Target resonator band (GHz)
    resonator_band: Tuple[float, float] = (6.0, 8.0)
    # Bath temperature (K)
    temperature: float = 0.020
    # Array guards: per-junction E_J (GHz), E_J/E_C ratio, plasma frequency (GHz)
    array_min_ej: float = 70.0
    array_min_ej_ec: float = 100.0
    array_min_plasma: float = 20.0
    # Two sideband frequencies closer than this (GHz) collide
    sideband_guard: float = 0.005
    # Sweep points per continuation chunk; fixed so output never depends on jobs
    chunk_size: int = 25
    # Worker threads for sweeps
    jobs: int = 1


class SolverSettings:
    """
    Numerical knobs shared by all modules.
    Instantiate with a different SolverConfig (or use with_overrides) to change behavior.
    """
    def __init__(self, config: SolverConfig | None = None):
        self.config = config or SolverConfig()
        if self.config.tree_rule not in TREE_RULES:
            raise ConfigurationError(f"Unknown tree rule: {self.config.tree_rule!r}", allowed=list(TREE_RULES))

    def __getattr__(self, name: str) -> Any:
        # only reached for names not set on the instance
        config = self.__dict__.get("config")
        if config is not None and name in _CONFIG_FIELDS:
            return getattr(config, name)
        raise AttributeError(name)

    def with_overrides(self, **overrides: Any) -> "SolverSettings":
        unknown = sorted(set(overrides) - set(_CONFIG_FIELDS))
        if unknown:
            raise ConfigurationError(f"Unknown setting(s): {', '.join(unknown)}")
        return SolverSettings(replace(self.config, **overrides))

    def is_dispersive(self, g: float, detuning: float) -> bool:
        if detuning == 0:
            return False
        return abs(g / detuning) < self.config.dispersive_threshold

    def as_dict(self) -> Dict[str, Any]:
        return {name: getattr(self.config, name) for name in _CONFIG_FIELDS}

    @classmethod
    def from_env(cls, base: Optional["SolverSettings"] = None) -> "SolverSettings":
        """
        Apply CIRCUIT_* environment overrides on top of base (or the defaults).
        """
        base = base or cls()
        overrides: Dict[str, Any] = {}
        for env_name, (field_name, cast) in _ENV_FIELDS.items():
            raw = os.environ.get(env_name)
            if raw is None or raw.strip() == "":
                continue
            try:
                overrides[field_name] = cast(raw.strip())
            except ValueError:
                raise ConfigurationError(f"Bad value for {env_name}: {raw!r}") from None
            logger.debug("settings: %s=%r from environment", field_name, overrides[field_name])
        return base.with_overrides(**overrides) if overrides else base


_CONFIG_FIELDS = tuple(f.name for f in fields(SolverConfig))

_ENV_FIELDS = {
    "CIRCUIT_JOBS": ("jobs", int),
    "CIRCUIT_FOCK_DIM": ("fock_dim", int),
    "CIRCUIT_CHUNK_SIZE": ("chunk_size", int),
    "CIRCUIT_TREE_RULE": ("tree_rule", lambda s: s.lower()),
    "CIRCUIT_TEMPERATURE_MK": ("temperature", lambda s: float(s) * 1e-3),
}

# -----------------------------------------------------------------------------
# Module-level default and accessors
# -----------------------------------------------------------------------------
_DEFAULT_SETTINGS: SolverSettings = SolverSettings()


def get_settings() -> SolverSettings:
    return _DEFAULT_SETTINGS


def set_settings(settings: SolverSettings) -> None:
    global _DEFAULT_SETTINGS
    _DEFAULT_SETTINGS = settings


def reset_settings() -> None:
    set_settings(SolverSettings())
