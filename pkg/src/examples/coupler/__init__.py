# src/examples/coupler/__init__.py
# Built-in design cases for the flux-tunable qubit-resonator coupler.
from .cases import CASES, CouplerCase, get_case

__all__ = ["CASES", "CouplerCase", "get_case"]
