import math

import pytest

from src.core import units
from src.core.errors import ConfigurationError, DomainError


def test_energy_scales():
    # (Phi0/2pi)^2/h ~ 163.5 GHz nH and e^2/2h ~ 19.37 GHz fF
    assert units.FLUX_ENERGY == pytest.approx(163.46, rel=1e-3)
    assert units.CHARGE_ENERGY == pytest.approx(19.37, rel=1e-3)
    assert units.IMPEDANCE_UNIT == pytest.approx(2054.0, rel=1e-3)


def test_inductive_and_charging_energy():
    assert units.inductive_energy(4.5) == pytest.approx(units.FLUX_ENERGY / 9.0)
    assert units.charging_energy(114.0) == pytest.approx(units.CHARGE_ENERGY / 114.0)
    assert units.inductive_energy(math.inf) == 0.0
    with pytest.raises(DomainError):
        units.inductive_energy(0.0)
    with pytest.raises(DomainError):
        units.charging_energy(-1.0)


@pytest.mark.parametrize("kind, si, canonical", [
    ("capacitance", 70e-15, 70.0),
    ("inductance", 4.5e-9, 4.5),
    ("energy", 6.62607015e-28, 1e-3),
    ("flux", units.Phi0 / 2.0, 0.5),
    ("frequency", 2.0 * math.pi * 7e9, 7.0),
])
def test_canonical_conversions(kind, si, canonical):
    assert units.to_canonical(si, kind) == pytest.approx(canonical)
    assert units.from_canonical(canonical, kind) == pytest.approx(si)


def test_unknown_unit_kind():
    with pytest.raises(ConfigurationError):
        units.to_canonical(1.0, "temperature")


def test_phase_and_frequency_helpers():
    assert units.flux_to_phase(0.25) == pytest.approx(math.pi / 2)
    assert units.phase_to_flux(math.pi) == pytest.approx(0.5)
    assert units.angular_to_ghz(units.ghz_to_angular(6.3)) == pytest.approx(6.3)
