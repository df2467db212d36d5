"""1D drift-diffusion simulation and extraction for Ga2O3 power diodes."""

__version__ = "0.1.0"

from .constants import K_B, Q, thermal_voltage  # noqa: E402
from .device import (DeviceStructure, Layer, ContactSpec, MeshConfig, band_alignment,  # noqa: E402
                     build_mesh, heterojunction_fig2, preset, schottky_fig1)
from .errors import (ConfigurationError, ConvergenceError, DomainError,  # noqa: E402
                     ExtractionError, OxDiodeError)
from .materials import DATABASE, GA2O3, NIO, MaterialRecord, get_material  # noqa: E402
from .solver import (Compliance, DeviceSolver, PhysicsFlags, SolverConfig,  # noqa: E402
                     iv_sweep, solve_bias, solve_equilibrium)
from .smallsignal import cv_sweep, quasistatic_capacitance  # noqa: E402
from .curves import CVCurve, IVCurve, read_cv_csv, read_iv_csv  # noqa: E402
from .extraction import (DiodeMetrics, extract_metrics, min_ideality,  # noqa: E402
                         mott_schottky_fit, rectification_ratio, turn_on_voltage)

__all__ = [
    "__version__", "K_B", "Q", "thermal_voltage",
    "DeviceStructure", "Layer", "ContactSpec", "MeshConfig", "band_alignment", "build_mesh",
    "heterojunction_fig2", "preset", "schottky_fig1",
    "ConfigurationError", "ConvergenceError", "DomainError", "ExtractionError", "OxDiodeError",
    "DATABASE", "GA2O3", "NIO", "MaterialRecord", "get_material",
    "Compliance", "DeviceSolver", "PhysicsFlags", "SolverConfig", "iv_sweep", "solve_bias",
    "solve_equilibrium", "cv_sweep", "quasistatic_capacitance",
    "CVCurve", "IVCurve", "read_cv_csv", "read_iv_csv",
    "DiodeMetrics", "extract_metrics", "min_ideality", "mott_schottky_fit",
    "rectification_ratio", "turn_on_voltage",
]
