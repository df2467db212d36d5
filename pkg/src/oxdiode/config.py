"""YAML run configuration: devices, temperatures, sweeps, models and outputs."""

from __future__ import annotations

import dataclasses
import math
import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import yaml

from .constants import celsius_to_kelvin
from .device import (DEFAULT_AREA, NM, ContactSpec, DeviceStructure, Layer, MeshConfig,
                     PRESETS, preset)
from .errors import ConfigurationError, DomainError
from .materials import T_MAX, T_MIN, get_material, merge_database
from .solver.core import SolverConfig
from .solver.physics import PhysicsFlags
from .solver.sweep import Compliance


class _Loader(yaml.SafeLoader):
    """Safe loader that also reads exponent floats without a decimal point (1e17)."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"""^[-+]?(?:[0-9][0-9_]*\.[0-9_]*(?:[eE][-+]?[0-9]+)?
                   |[0-9][0-9_]*[eE][-+]?[0-9]+
                   |\.[0-9_]+(?:[eE][-+]?[0-9]+)?
                   |[-+]?\.(?:inf|Inf|INF)
                   |\.(?:nan|NaN|NAN))$""", re.X),
    list("-+0123456789."))


def parse_yaml(text: str):
    return yaml.load(text, Loader=_Loader)


OUTPUT_DIR_ENV = "OXDIODE_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "oxdiode-output"
TASKS = ("band-diagram", "simulate-iv", "simulate-cv")
FORMATS = ("csv", "json", "dat")


@dataclass(frozen=True)
class SweepRange:
    v_from: float
    v_to: float
    step: float

    def __post_init__(self):
        if not self.step > 0:
            raise ConfigurationError("sweep step must be positive")


@dataclass(frozen=True)
class ExtractionSettings:
    permittivity: float = 10.0
    measured_permittivity: float = 12.4
    turn_on_threshold: float = 0.5
    ideality_window: tuple = (1e-6, 1e-1)
    noise_floor: float = 1e-8
    rectification_probe: float = 3.0
    smoothing_window: Optional[int] = None
    mott_schottky_fraction: float = 0.8


@dataclass(frozen=True)
class RunConfig:
    devices: tuple = ("schottky-fig1", "heterojunction-fig2")
    temperatures: tuple = (25.0, 410.0)
    temperature_unit: str = "C"
    tasks: tuple = TASKS
    iv: SweepRange = SweepRange(-3.0, 3.0, 0.05)
    cv: SweepRange = SweepRange(0.0, -4.0, 0.1)
    cv_delta_v: float = 0.01
    compliance: Compliance = Compliance()
    physics: PhysicsFlags = PhysicsFlags()
    solver: SolverConfig = SolverConfig()
    mesh: MeshConfig = MeshConfig()
    materials: dict = field(default_factory=dict)
    extraction: ExtractionSettings = ExtractionSettings()
    output_dir: Optional[str] = None
    formats: tuple = ("csv", "json")

    def __post_init__(self):
        if not self.tasks:
            raise ConfigurationError("at least one task is required")
        for t in self.tasks:
            if t not in TASKS:
                raise ConfigurationError(f"unknown task {t!r}; known: {', '.join(TASKS)}")
        for f in self.formats:
            if f not in FORMATS:
                raise ConfigurationError(f"unknown output format {f!r}")
        if self.temperature_unit not in ("C", "K"):
            raise ConfigurationError("temperature_unit must be 'C' or 'K'")
        if not self.devices:
            raise ConfigurationError("at least one device is required")
        for tk in self.temperatures_k:
            if not (T_MIN <= tk <= T_MAX):
                raise ConfigurationError(f"temperature {tk:.2f} K outside [{T_MIN}, {T_MAX}] K")

    @property
    def temperatures_k(self) -> tuple:
        conv = celsius_to_kelvin if self.temperature_unit == "C" else float
        return tuple(round(conv(float(t)), 6) for t in self.temperatures)

    @property
    def resolved_output_dir(self) -> Path:
        return Path(self.output_dir or os.environ.get(OUTPUT_DIR_ENV) or DEFAULT_OUTPUT_DIR)

    def material_database(self):
        try:
            return merge_database(self.materials)
        except (DomainError, TypeError) as exc:
            raise ConfigurationError(str(exc)) from exc

    def build_devices(self) -> list:
        db = self.material_database()
        return [_build_device(spec, db) for spec in self.devices]

    def to_dict(self) -> dict:
        return _plain(dataclasses.asdict(self))

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=True, default_flow_style=False)


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, float) and math.isinf(obj):
        return None
    return obj


def _build_device(spec, db) -> DeviceStructure:
    if isinstance(spec, str):
        return preset(spec, materials=db)
    spec = dict(spec)
    if "preset" in spec:
        name = spec.pop("preset")
        if name not in PRESETS:
            raise ConfigurationError(f"unknown device preset {name!r}")
        if "diameter_um" in spec:
            spec["area"] = math.pi * (spec.pop("diameter_um") * 1e-4 / 2) ** 2
        try:
            return preset(name, materials=db, **spec)
        except TypeError as exc:
            raise ConfigurationError(f"preset {name}: {exc}") from exc
    try:
        layers = []
        for entry in spec.pop("layers"):
            entry = dict(entry)
            layers.append(Layer(
                material=get_material(entry.pop("material"), db),
                thickness=float(entry.pop("thickness_nm")) * NM,
                donor_density=float(entry.pop("donor_density", 0.0)),
                acceptor_density=float(entry.pop("acceptor_density", 0.0)),
            ))
            if entry:
                raise ConfigurationError(f"unknown layer keys {sorted(entry)}")
        top = ContactSpec(**spec.pop("top_contact", {"kind": "ohmic"}))
        bottom = ContactSpec(**spec.pop("bottom_contact", {"kind": "ohmic"}))
        if "diameter_um" in spec:
            area = math.pi * (float(spec.pop("diameter_um")) * 1e-4 / 2) ** 2
        else:
            area = float(spec.pop("area", DEFAULT_AREA))
        name = spec.pop("name", "device")
    except KeyError as exc:
        raise ConfigurationError(f"device entry missing {exc}") from None
    except DomainError as exc:
        raise ConfigurationError(str(exc)) from exc
    if spec:
        raise ConfigurationError(f"unknown device keys {sorted(spec)}")
    return DeviceStructure(tuple(layers), top, bottom, area, name)


def _section(cls, data, name):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigurationError(f"section {name!r} must be a mapping")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigurationError(f"section {name!r}: unknown keys {sorted(unknown)}")
    data = {k: tuple(v) if isinstance(v, list) else v for k, v in data.items()}
    try:
        return cls(**data)
    except TypeError as exc:
        raise ConfigurationError(f"section {name!r}: {exc}") from exc


def _mesh_section(data):
    if data is None:
        return MeshConfig()
    data = dict(data)
    for key in ("min_spacing", "max_spacing"):
        if f"{key}_nm" in data:
            data[key] = float(data.pop(f"{key}_nm")) * NM
    return _section(MeshConfig, data, "mesh")


def _compliance_section(data):
    if data is None:
        return Compliance()
    data = dict(data)
    mapped = {"current": data.pop("current_A", data.pop("current", None)),
              "density": data.pop("density_A_cm2", data.pop("density", None))}
    if data:
        raise ConfigurationError(f"section 'compliance': unknown keys {sorted(data)}")
    if mapped["current"] is None and mapped["density"] is None:
        return Compliance(current=None)
    return Compliance(**mapped)


TOP_LEVEL = {"devices", "temperatures", "temperature_unit", "tasks", "iv", "cv", "cv_delta_v",
             "compliance", "physics", "solver", "mesh", "materials", "extraction",
             "output_dir", "formats"}


def config_from_dict(data: Optional[dict]) -> RunConfig:
    data = dict(data or {})
    unknown = set(data) - TOP_LEVEL
    if unknown:
        raise ConfigurationError(f"unknown config keys {sorted(unknown)}")
    kwargs: dict[str, Any] = {}
    for key in ("devices", "temperatures", "tasks", "formats"):
        if key in data:
            val = data[key]
            kwargs[key] = tuple(val) if isinstance(val, (list, tuple)) else (val,)
    for key in ("temperature_unit", "output_dir", "cv_delta_v"):
        if key in data:
            kwargs[key] = data[key]
    if "materials" in data:
        kwargs["materials"] = dict(data["materials"] or {})
    for key in ("iv", "cv"):
        if key in data:
            kwargs[key] = _section(SweepRange, data[key], key)
    if "compliance" in data:
        kwargs["compliance"] = _compliance_section(data["compliance"])
    if "physics" in data:
        kwargs["physics"] = _section(PhysicsFlags, data["physics"], "physics")
    if "solver" in data:
        kwargs["solver"] = _section(SolverConfig, data["solver"], "solver")
    if "mesh" in data:
        kwargs["mesh"] = _mesh_section(data["mesh"])
    if "extraction" in data:
        kwargs["extraction"] = _section(ExtractionSettings, data["extraction"], "extraction")
    try:
        cfg = RunConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(str(exc)) from exc
    cfg.build_devices()  # validate stacks and material names early
    return cfg


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    try:
        data = parse_yaml(text)
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"invalid YAML in {path}: {exc}") from exc
    if data is not None and not isinstance(data, dict):
        raise ConfigurationError(f"{path}: top level must be a mapping")
    return config_from_dict(data)


def apply_override(data: dict, assignment: str) -> dict:
    """Apply ``a.b.c=value`` to a nested dict; the value is parsed as YAML."""
    if "=" not in assignment:
        raise ConfigurationError(f"override {assignment!r} must look like key.path=value")
    path, _, raw = assignment.partition("=")
    keys = path.strip().split(".")
    node = data
    for k in keys[:-1]:
        node = node.setdefault(k, {})
        if not isinstance(node, dict):
            raise ConfigurationError(f"override {assignment!r}: {k} is not a section")
    node[keys[-1]] = parse_yaml(raw)
    return data
