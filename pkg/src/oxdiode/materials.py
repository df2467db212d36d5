"""Material database and temperature-dependent band parameters.

Energies in eV, lengths in cm, densities in cm^-3, temperatures in K.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Mapping, Optional

from .constants import H_PLANCK, K_B, M0, Q
from .errors import DomainError

T_MIN = 250.0
T_MAX = 800.0

# Relative permittivity conventionally used when extracting doping from
# measured Ga2O3 C-V data (simulation uses the database value).
GA2O3_EXTRACTION_PERMITTIVITY = 12.4


@dataclass(frozen=True)
class MaterialRecord:
    name: str
    bandgap_300k: float
    electron_affinity: float
    relative_permittivity: float
    electron_mobility: float
    hole_mobility: float
    electron_effective_mass: float
    hole_effective_mass: float
    electron_saturation_velocity: Optional[float] = None
    srh_lifetime_n: float = 1e-9
    srh_lifetime_p: float = 1e-9
    bandgap_temp_coefficient: float = 3.0e-4
    # stored for completeness; no thermal model uses them
    lattice_heat_capacity: Optional[float] = None
    thermal_conductivity: Optional[float] = None

    def __post_init__(self):
        checks = {
            "bandgap_300k": self.bandgap_300k > 0,
            "electron_affinity": self.electron_affinity > 0,
            "relative_permittivity": self.relative_permittivity >= 1,
            "electron_effective_mass": self.electron_effective_mass > 0,
            "hole_effective_mass": self.hole_effective_mass > 0,
            "electron_mobility": self.electron_mobility > 0,
            "hole_mobility": self.hole_mobility > 0,
            "srh_lifetime_n": self.srh_lifetime_n > 0,
            "srh_lifetime_p": self.srh_lifetime_p > 0,
            "bandgap_temp_coefficient": self.bandgap_temp_coefficient >= 0,
        }
        bad = [k for k, ok in checks.items() if not ok]
        if bad:
            raise DomainError(f"material {self.name!r}: invalid {', '.join(bad)}")

    def replace(self, **overrides) -> "MaterialRecord":
        return dataclasses.replace(self, **overrides)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


GA2O3 = MaterialRecord(
    name="Ga2O3",
    bandgap_300k=5.02,
    electron_affinity=3.618,
    relative_permittivity=10.0,
    electron_mobility=100.0,
    hole_mobility=1.0,
    electron_effective_mass=0.28,
    hole_effective_mass=1.0,
    electron_saturation_velocity=2e7,
    lattice_heat_capacity=3.332,
    thermal_conductivity=0.27,
)

NIO = MaterialRecord(
    name="NiO",
    bandgap_300k=3.6,
    electron_affinity=1.45,
    relative_permittivity=11.75,
    electron_mobility=50.0,
    hole_mobility=1.0,
    electron_effective_mass=0.121,
    hole_effective_mass=0.8,
    electron_saturation_velocity=None,
    lattice_heat_capacity=1.67,
    thermal_conductivity=0.33,
)

DATABASE: dict[str, MaterialRecord] = {GA2O3.name: GA2O3, NIO.name: NIO}


def get_material(name: str, database: Optional[Mapping[str, MaterialRecord]] = None) -> MaterialRecord:
    db = DATABASE if database is None else database
    try:
        return db[name]
    except KeyError:
        raise DomainError(f"unknown material {name!r}; known: {', '.join(sorted(db))}") from None


def merge_database(overrides: Optional[Mapping[str, Mapping]] = None,
                   base: Optional[Mapping[str, MaterialRecord]] = None) -> dict[str, MaterialRecord]:
    """Return a copy of the database with per-field overrides applied.

    ``overrides`` maps material name to a dict of field values. Unknown names
    create new records and must then supply every required field.
    """
    db = dict(DATABASE if base is None else base)
    for name, fields in (overrides or {}).items():
        fields = dict(fields)
        unknown = set(fields) - {f.name for f in dataclasses.fields(MaterialRecord)}
        if unknown:
            raise DomainError(f"material {name!r}: unknown fields {sorted(unknown)}")
        if name in db:
            db[name] = db[name].replace(**fields)
        else:
            db[name] = MaterialRecord(name=name, **{k: v for k, v in fields.items() if k != "name"})
    return db


def _check_temperature(temperature: float) -> None:
    if not (T_MIN <= temperature <= T_MAX):
        raise DomainError(
            f"temperature {temperature} K outside supported range [{T_MIN}, {T_MAX}] K")


def bandgap_at(material: MaterialRecord, temperature: float) -> float:
    """Linear bandgap model E_g(T) = E_g(300 K) - alpha (T - 300)."""
    _check_temperature(temperature)
    eg = material.bandgap_300k - material.bandgap_temp_coefficient * (temperature - 300.0)
    if eg <= 0:
        raise DomainError(f"{material.name}: bandgap nonpositive at {temperature} K")
    return eg


def effective_dos(mass_ratio: float, temperature: float) -> float:
    """Effective density of states 2 (2 pi m* k T / h^2)^(3/2) in cm^-3."""
    if not (mass_ratio > 0 and temperature > 0):
        raise DomainError("effective_dos requires positive mass ratio and temperature")
    kt_joule = K_B * Q * temperature
    return 2.0 * (2.0 * math.pi * mass_ratio * M0 * kt_joule / H_PLANCK**2) ** 1.5 * 1e-6


def intrinsic_density(material: MaterialRecord, temperature: float) -> float:
    eg = bandgap_at(material, temperature)
    nc = effective_dos(material.electron_effective_mass, temperature)
    nv = effective_dos(material.hole_effective_mass, temperature)
    return math.sqrt(nc * nv) * math.exp(-eg / (2.0 * K_B * temperature))


def richardson_constant(mass_ratio: float) -> float:
    """Effective Richardson constant 4 pi q m* k^2 / h^3 in A/(cm^2 K^2)."""
    if mass_ratio < 0:
        raise DomainError("richardson_constant requires a nonnegative mass ratio")
    k_si = K_B * Q
    return 4.0 * math.pi * Q * mass_ratio * M0 * k_si**2 / H_PLANCK**3 * 1e-4


def thermal_velocity(mass_ratio: float, temperature: float) -> float:
    """Mean thermal speed sqrt(8kT / (pi m*)) in cm/s."""
    return math.sqrt(8.0 * K_B * Q * temperature / (math.pi * mass_ratio * M0)) * 100.0


def emission_velocity(mass_ratio: float, temperature: float) -> float:
    """Thermionic recombination velocity A* T^2 / (q N_c) in cm/s."""
    return richardson_constant(mass_ratio) * temperature**2 / (
        Q * effective_dos(mass_ratio, temperature))
