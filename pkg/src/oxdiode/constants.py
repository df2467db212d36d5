"""CODATA physical constants in the cm / V / eV / K unit system used throughout."""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class PhysicalConstants:
    elementary_charge: float = 1.602176634e-19  # C
    boltzmann: float = 1.380649e-23 / 1.602176634e-19  # eV/K, exact SI ratio
    vacuum_permittivity: float = 8.8541878128e-14  # F/cm
    electron_rest_mass: float = 9.1093837015e-31  # kg
    planck: float = 6.62607015e-34  # J s

    def __post_init__(self):
        for name in ("elementary_charge", "boltzmann", "vacuum_permittivity",
                     "electron_rest_mass", "planck"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @property
    def hbar(self) -> float:
        return self.planck / (2.0 * math.pi)

    @property
    def boltzmann_si(self) -> float:
        """Boltzmann constant in J/K."""
        return self.boltzmann * self.elementary_charge

    def thermal_voltage(self, temperature: float) -> float:
        """kT/q in volts (numerically equal to kT in eV)."""
        return self.boltzmann * temperature


CONSTANTS = PhysicalConstants()

Q = CONSTANTS.elementary_charge
K_B = CONSTANTS.boltzmann
EPS0 = CONSTANTS.vacuum_permittivity
M0 = CONSTANTS.electron_rest_mass
H_PLANCK = CONSTANTS.planck
HBAR = CONSTANTS.hbar


def thermal_voltage(temperature: float) -> float:
    return K_B * temperature


def celsius_to_kelvin(t_c: float) -> float:
    return t_c + 273.15
