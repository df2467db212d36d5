"""Quasi-static junction capacitance from charge differences between two DC solves."""

from __future__ import annotations

import logging
from typing import Optional

import numpy as np

from .constants import EPS0, K_B, Q
from .curves import CVCurve
from .device import DeviceStructure
from .errors import ConfigurationError, ConvergenceError
from .solver.core import DeviceSolver, SolutionState, SolverConfig
from .solver.physics import PhysicsFlags

log = logging.getLogger(__name__)

DEFAULT_DELTA_V = 0.01


def junction_charge(solver: DeviceSolver, state: SolutionState) -> float:
    """Depletion charge per area, C/cm^2.

    Taken as the peak electric displacement, which by Gauss's law equals the
    space charge between the field maximum and the nearest zero-field plane.
    For a one-sided junction this is the charge on the contact side; for a
    heterojunction it is the charge on either side of the interface, even
    when one layer is fully depleted and no interior zero-field point exists.
    """
    return float(np.max(np.abs(solver.displacement(state))))


def quasistatic_capacitance(device: DeviceStructure, temperature: float, bias: float,
                            delta_v: float = DEFAULT_DELTA_V,
                            flags: Optional[PhysicsFlags] = None,
                            config: Optional[SolverConfig] = None,
                            warm_start: Optional[SolutionState] = None,
                            solver: Optional[DeviceSolver] = None) -> float:
    """C = |Q(V + dV/2) - Q(V - dV/2)| / dV in F/cm^2."""
    if not delta_v > 0:
        raise ConfigurationError("delta_v must be positive")
    solver = solver or DeviceSolver(device, temperature, flags, config)
    warm = warm_start or solver.equilibrium()
    lo = solver.solve(bias - delta_v / 2, warm)
    hi = solver.solve(bias + delta_v / 2, lo)
    return abs(junction_charge(solver, hi) - junction_charge(solver, lo)) / delta_v


def depletion_capacitance(bias, v_bi: float, density: float, relative_permittivity: float,
                          temperature: Optional[float] = None):
    """Depletion-approximation C = sqrt(q eps N / (2 (V_bi - V [- kT/q]))).

    The kT/q term is included only when ``temperature`` is given.
    """
    v = np.asarray(bias, dtype=float)
    drop = v_bi - v - (K_B * temperature if temperature is not None else 0.0)
    if np.any(drop <= 0):
        raise ValueError("bias must stay below the built-in potential")
    return np.sqrt(Q * relative_permittivity * EPS0 * density / (2.0 * drop))


def depletion_width(v_bi: float, reverse_bias: float, density: float,
                    relative_permittivity: float) -> float:
    """w = sqrt(2 eps (V_bi + V_R) / (q N)) in cm."""
    return float(np.sqrt(2.0 * relative_permittivity * EPS0 * (v_bi + reverse_bias) / (Q * density)))


def cv_sweep(device: DeviceStructure, temperature: float, v_from: float, v_to: float,
             step: float = 0.1, flags: Optional[PhysicsFlags] = None,
             config: Optional[SolverConfig] = None, delta_v: float = DEFAULT_DELTA_V,
             solver: Optional[DeviceSolver] = None) -> CVCurve:
    """Quasi-static C-V from ``v_from`` to ``v_to``, continuing from equilibrium."""
    if not step > 0:
        raise ConfigurationError("cv step must be positive")
    solver = solver or DeviceSolver(device, temperature, flags, config)
    n = int(round(abs(v_to - v_from) / step))
    biases = np.linspace(v_from, v_to, n + 1) if n > 0 else np.array([v_from])
    # visit points in order of distance from 0 V so continuation starts at equilibrium
    order = np.argsort(np.abs(biases), kind="stable")
    caps = np.full(len(biases), np.nan)
    ok = np.zeros(len(biases), bool)
    eq = solver.equilibrium()
    warm_pos, warm_neg = eq, eq
    for idx in order:
        v = float(biases[idx])
        warm = warm_pos if v >= 0 else warm_neg
        try:
            state = solver.solve(v, warm)
            caps[idx] = quasistatic_capacitance(device, temperature, v, delta_v,
                                                warm_start=state, solver=solver)
            ok[idx] = True
        except ConvergenceError as exc:
            log.warning("C-V point %.4g V failed: %s", v, exc)
            continue
        if v >= 0:
            warm_pos = state
        else:
            warm_neg = state
    partial = not ok.all()
    keep = ok if partial else slice(None)
    return CVCurve(biases[keep], caps[keep], temperature, device=device.name,
                   partial=partial, converged=ok[keep])
