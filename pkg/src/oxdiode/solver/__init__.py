"""Poisson and drift-diffusion solver."""

from .core import DeviceSolver, SolutionState, SolverConfig, solve_bias, solve_equilibrium
from .physics import PhysicsFlags, tat_enhancement
from .sweep import Compliance, iv_sweep

__all__ = ["DeviceSolver", "SolutionState", "SolverConfig", "solve_bias", "solve_equilibrium",
           "PhysicsFlags", "tat_enhancement", "Compliance", "iv_sweep"]
