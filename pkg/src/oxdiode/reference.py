"""Measured figures of merit for the two reference diodes, used by ``compare``."""

from __future__ import annotations

from dataclasses import dataclass
from types import MappingProxyType
from typing import Optional

from .constants import celsius_to_kelvin

ROOM_TEMPERATURE = celsius_to_kelvin(25.0)
HIGH_TEMPERATURE = celsius_to_kelvin(410.0)

SCHOTTKY = "schottky-fig1"
HETEROJUNCTION = "heterojunction-fig2"


@dataclass(frozen=True)
class Observation:
    quantity: str
    device: str
    value: float
    temperature: Optional[float] = None
    qualifier: str = "~"  # "~" approximate, ">" lower bound
    provenance: str = ""


@dataclass(frozen=True)
class ReferenceDataset:
    entries: tuple

    def get(self, quantity: str, device: str, temperature: Optional[float] = None) -> Observation:
        for e in self.entries:
            if e.quantity == quantity and e.device == device and (
                    temperature is None or e.temperature is None or abs(e.temperature - temperature) < 1.0):
                return e
        raise KeyError((quantity, device, temperature))

    def as_mapping(self):
        return MappingProxyType({(e.quantity, e.device, e.temperature): e for e in self.entries})


REFERENCE = ReferenceDataset((
    Observation("v_on", SCHOTTKY, 1.3, ROOM_TEMPERATURE, "~",
                "measured turn-on voltage at 0.5 A/cm^2, Ni Schottky, room temperature"),
    Observation("v_on", HETEROJUNCTION, 1.6, ROOM_TEMPERATURE, "~",
                "measured turn-on voltage at 0.5 A/cm^2, NiO heterojunction, room temperature"),
    Observation("v_on", SCHOTTKY, 0.4, HIGH_TEMPERATURE, "~",
                "measured turn-on voltage at 0.5 A/cm^2, Ni Schottky, 410 C"),
    Observation("v_on", HETEROJUNCTION, 0.8, HIGH_TEMPERATURE, "~",
                "measured turn-on voltage at 0.5 A/cm^2, NiO heterojunction, 410 C"),
    Observation("mott_schottky_vbi", SCHOTTKY, 1.3, ROOM_TEMPERATURE, "~",
                "1/C^2 intercept of the 100 kHz C-V, Ni Schottky"),
    Observation("mott_schottky_vbi", HETEROJUNCTION, 1.9, ROOM_TEMPERATURE, "~",
                "1/C^2 intercept of the 100 kHz C-V, NiO heterojunction"),
    Observation("mott_schottky_density", SCHOTTKY, 4e18, ROOM_TEMPERATURE, "~",
                "apparent donor density from C-V with eps_r = 12.4"),
    Observation("min_ideality", SCHOTTKY, 1.09, ROOM_TEMPERATURE, "~",
                "minimum forward ideality factor, Ni Schottky"),
    Observation("min_ideality", HETEROJUNCTION, 2.0, ROOM_TEMPERATURE, "~",
                "minimum forward ideality factor, NiO heterojunction"),
    Observation("rectification_ratio", SCHOTTKY, 1e6, ROOM_TEMPERATURE, "~",
                "on/off current ratio, Ni Schottky, room temperature"),
    Observation("rectification_ratio", SCHOTTKY, 1e3, HIGH_TEMPERATURE, "~",
                "on/off current ratio, Ni Schottky, 410 C"),
    Observation("rectification_ratio", HETEROJUNCTION, 1e6, HIGH_TEMPERATURE, ">",
                "on/off current ratio, NiO heterojunction, 410 C; reverse current at the instrument floor"),
))
