"""Diode layer stacks, contacts, 1D meshing and vacuum-referenced band alignment."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from .constants import Q
from .errors import ConfigurationError
from .materials import DATABASE, MaterialRecord, bandgap_at, get_material

NM = 1e-7  # cm

DEFAULT_DIAMETER = 200e-4  # cm
DEFAULT_AREA = math.pi * (DEFAULT_DIAMETER / 2) ** 2
NI_WORK_FUNCTION = 5.05
SUBSTRATE_TRUNCATION = 2e-4  # cm of Ga2O3 kept in the mesh
NIO_THICKNESS = 200 * NM
NIO_SHEET_RESISTANCE = 3e6  # ohm/sq, 200 nm film
GA2O3_DONOR_DENSITY = 4e18


def acceptor_density_from_sheet_resistance(sheet_resistance: float, thickness: float,
                                           hole_mobility: float) -> float:
    """p = 1 / (q mu_p rho) with rho = R_sheet * t."""
    rho = sheet_resistance * thickness
    return 1.0 / (Q * hole_mobility * rho)


NIO_ACCEPTOR_DENSITY = acceptor_density_from_sheet_resistance(
    NIO_SHEET_RESISTANCE, NIO_THICKNESS, DATABASE["NiO"].hole_mobility)


@dataclass(frozen=True)
class Layer:
    material: MaterialRecord
    thickness: float
    donor_density: float = 0.0
    acceptor_density: float = 0.0

    def __post_init__(self):
        if not self.thickness > 0:
            raise ConfigurationError(f"layer {self.material.name}: thickness must be positive")
        if self.donor_density < 0 or self.acceptor_density < 0:
            raise ConfigurationError(f"layer {self.material.name}: densities must be >= 0")

    @property
    def net_doping(self) -> float:
        return self.donor_density - self.acceptor_density


@dataclass(frozen=True)
class ContactSpec:
    kind: str = "ohmic"
    work_function: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("ohmic", "schottky"):
            raise ConfigurationError(f"unknown contact kind {self.kind!r}")
        if self.kind == "schottky":
            if self.work_function is None or not (3.0 <= self.work_function <= 6.5):
                raise ConfigurationError("schottky work function must lie in [3.0, 6.5] eV")


@dataclass(frozen=True)
class DeviceStructure:
    """Ordered top-to-bottom layer stack; x = 0 at the top contact."""

    layers: tuple
    top_contact: ContactSpec
    bottom_contact: ContactSpec
    area: float = DEFAULT_AREA
    name: str = "device"

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if not self.layers:
            raise ConfigurationError("device needs at least one layer")
        if self.total_thickness > 100e-4:
            raise ConfigurationError("total thickness exceeds 100 um")
        if not self.area > 0:
            raise ConfigurationError("area must be positive")

    @property
    def total_thickness(self) -> float:
        return float(sum(layer.thickness for layer in self.layers))

    @property
    def layer_boundaries(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum([layer.thickness for layer in self.layers])])

    def replace_layer(self, index: int, **changes) -> "DeviceStructure":
        layers = list(self.layers)
        old = layers[index]
        layers[index] = Layer(**{**old.__dict__, **changes})
        return DeviceStructure(tuple(layers), self.top_contact, self.bottom_contact,
                               self.area, self.name)


def schottky_fig1(materials: Optional[Mapping[str, MaterialRecord]] = None,
                  donor_density: float = GA2O3_DONOR_DENSITY,
                  substrate_thickness: float = SUBSTRATE_TRUNCATION,
                  work_function: float = NI_WORK_FUNCTION,
                  area: float = DEFAULT_AREA) -> DeviceStructure:
    """Ni Schottky contact on n-Ga2O3 with an ohmic back contact."""
    ga = get_material("Ga2O3", materials)
    return DeviceStructure(
        layers=(Layer(ga, substrate_thickness, donor_density=donor_density),),
        top_contact=ContactSpec("schottky", work_function),
        bottom_contact=ContactSpec("ohmic"),
        area=area,
        name="schottky-fig1",
    )


def heterojunction_fig2(materials: Optional[Mapping[str, MaterialRecord]] = None,
                        donor_density: float = GA2O3_DONOR_DENSITY,
                        acceptor_density: float = NIO_ACCEPTOR_DENSITY,
                        nio_thickness: float = NIO_THICKNESS,
                        substrate_thickness: float = SUBSTRATE_TRUNCATION,
                        area: float = DEFAULT_AREA) -> DeviceStructure:
    """p-NiO on n-Ga2O3, ohmic contacts on both sides."""
    nio = get_material("NiO", materials)
    ga = get_material("Ga2O3", materials)
    return DeviceStructure(
        layers=(Layer(nio, nio_thickness, acceptor_density=acceptor_density),
                Layer(ga, substrate_thickness, donor_density=donor_density)),
        top_contact=ContactSpec("ohmic"),
        bottom_contact=ContactSpec("ohmic"),
        area=area,
        name="heterojunction-fig2",
    )


PRESETS = {
    "schottky-fig1": schottky_fig1,
    "heterojunction-fig2": heterojunction_fig2,
}


def preset(name: str, **kwargs) -> DeviceStructure:
    try:
        factory = PRESETS[name]
    except KeyError:
        raise ConfigurationError(f"unknown device preset {name!r}; known: {', '.join(PRESETS)}") from None
    return factory(**kwargs)


# --------------------------------------------------------------------------
# Mesh
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class MeshConfig:
    min_spacing: float = 0.5 * NM
    growth: float = 1.05
    max_spacing: float = 20 * NM
    min_nodes: int = 100
    max_nodes: int = 20000

    def __post_init__(self):
        if not self.min_spacing > 0:
            raise ConfigurationError("min_spacing must be positive")
        if not (1.0 <= self.growth <= 1.5):
            raise ConfigurationError("growth ratio must lie in [1, 1.5]")
        if self.max_spacing < self.min_spacing:
            raise ConfigurationError("max_spacing must be >= min_spacing")


@dataclass(frozen=True)
class Mesh1D:
    node_positions: np.ndarray
    element_material: np.ndarray  # index into ``materials``
    element_layer: np.ndarray
    interface_nodes: tuple
    materials: tuple

    @property
    def n_nodes(self) -> int:
        return len(self.node_positions)

    @property
    def spacing(self) -> np.ndarray:
        return np.diff(self.node_positions)


def _graded_half(half: float, cfg: MeshConfig) -> list:
    steps, total, h = [], 0.0, cfg.min_spacing
    while total < half:
        steps.append(h)
        total += h
        h = min(h * cfg.growth, cfg.max_spacing)
    return steps


def _layer_spacings(thickness: float, cfg: MeshConfig) -> np.ndarray:
    if thickness < 2 * cfg.min_spacing:
        raise ConfigurationError(
            f"layer thickness {thickness:g} cm is thinner than two minimum spacings")
    half = _graded_half(thickness / 2, cfg)
    steps = np.array(half + half[::-1])
    # uniform shrink keeps every ratio and never enlarges the contact spacing
    return steps * (thickness / steps.sum())


def build_mesh(device: DeviceStructure, refinement: Optional[MeshConfig] = None) -> Mesh1D:
    cfg = refinement or MeshConfig()
    spacings, elem_layer = [], []
    for k, layer in enumerate(device.layers):
        s = _layer_spacings(layer.thickness, cfg)
        spacings.append(s)
        elem_layer.append(np.full(len(s), k))
    h = np.concatenate(spacings)
    elem_layer = np.concatenate(elem_layer)
    if len(h) + 1 < cfg.min_nodes:
        split = math.ceil((cfg.min_nodes - 1) / len(h))
        h = np.repeat(h / split, split)
        elem_layer = np.repeat(elem_layer, split)
    if len(h) + 1 > cfg.max_nodes:
        raise ConfigurationError(f"mesh would need {len(h) + 1} nodes (> {cfg.max_nodes})")

    x = np.concatenate([[0.0], np.cumsum(h)])
    # pin layer boundaries exactly
    bounds = device.layer_boundaries
    first = np.concatenate([[0], np.flatnonzero(np.diff(elem_layer)) + 1])
    for k, idx in enumerate(first):
        x[idx] = bounds[k]
    x[-1] = bounds[-1]

    names = []
    for layer in device.layers:
        if layer.material not in names:
            names.append(layer.material)
    elem_material = np.array([names.index(device.layers[k].material) for k in elem_layer])
    interface_nodes = tuple(int(i) for i in first[1:])
    return Mesh1D(x, elem_material, elem_layer, interface_nodes, tuple(names))


# --------------------------------------------------------------------------
# Band alignment
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class InterfaceOffsets:
    upper: str
    lower: str
    delta_ec: float  # E_c(upper) - E_c(lower), eV
    delta_ev: float  # E_v(upper) - E_v(lower), eV
    classification: str  # straddling | staggered | broken | none


@dataclass(frozen=True)
class BandAlignment:
    temperature: float
    conduction_edges: tuple  # vacuum-referenced E_c per layer
    valence_edges: tuple
    interfaces: tuple = field(default_factory=tuple)
    top_barrier: Optional[float] = None
    bottom_barrier: Optional[float] = None


def classify_alignment(ec1: float, ev1: float, ec2: float, ev2: float, tol: float = 1e-12) -> str:
    dc, dv = ec1 - ec2, ev1 - ev2
    if abs(dc) < tol and abs(dv) < tol:
        return "none"
    if max(ev1, ev2) >= min(ec1, ec2):
        return "broken"
    if dc * dv > 0:
        return "staggered"
    return "straddling"


def schottky_barrier(work_function: float, material: MaterialRecord) -> float:
    """Electron barrier height from the electron affinity rule."""
    return work_function - material.electron_affinity


def band_alignment(device: DeviceStructure, temperature: float = 300.0) -> BandAlignment:
    ec, ev = [], []
    for layer in device.layers:
        chi = layer.material.electron_affinity
        eg = bandgap_at(layer.material, temperature)
        ec.append(-chi)
        ev.append(-(chi + eg))
    interfaces = []
    for k in range(len(device.layers) - 1):
        interfaces.append(InterfaceOffsets(
            upper=device.layers[k].material.name,
            lower=device.layers[k + 1].material.name,
            delta_ec=ec[k] - ec[k + 1],
            delta_ev=ev[k] - ev[k + 1],
            classification=classify_alignment(ec[k], ev[k], ec[k + 1], ev[k + 1]),
        ))
    top = bottom = None
    if device.top_contact.kind == "schottky":
        top = schottky_barrier(device.top_contact.work_function, device.layers[0].material)
    if device.bottom_contact.kind == "schottky":
        bottom = schottky_barrier(device.bottom_contact.work_function, device.layers[-1].material)
    return BandAlignment(temperature, tuple(ec), tuple(ev), tuple(interfaces), top, bottom)
