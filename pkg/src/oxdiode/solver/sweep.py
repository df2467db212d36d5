"""Bias continuation for I-V sweeps with step halving and a compliance clamp."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..curves import IVCurve
from ..device import DeviceStructure
from ..errors import ConfigurationError, ConvergenceError
from .core import DeviceSolver, SolutionState, SolverConfig
from .physics import PhysicsFlags

log = logging.getLogger(__name__)

DEFAULT_COMPLIANCE_CURRENT = 1e-3  # A


@dataclass(frozen=True)
class Compliance:
    """Either an absolute current (A) or a current density (A/cm^2) limit."""

    current: Optional[float] = DEFAULT_COMPLIANCE_CURRENT
    density: Optional[float] = None

    def __post_init__(self):
        if self.current is not None and self.density is not None:
            raise ConfigurationError("set either compliance current or density, not both")
        for v in (self.current, self.density):
            if v is not None and not v > 0:
                raise ConfigurationError("compliance must be positive")

    def limit_density(self, area: float) -> float:
        if self.density is not None:
            return self.density
        if self.current is not None:
            return self.current / area
        return math.inf

    def describe(self, area: float) -> str:
        if self.density is not None:
            return f"density {self.density:g} A/cm^2"
        if self.current is not None:
            return f"current {self.current:g} A ({self.current / area:.4g} A/cm^2 at {area:.5g} cm^2)"
        return "none"


NO_COMPLIANCE = Compliance(current=None)


def _grid(v_end: float, step: float) -> np.ndarray:
    count = int(math.floor(abs(v_end) / step + 1e-9))
    pts = [math.copysign(k * step, v_end) for k in range(1, count + 1)]
    if not pts or abs(abs(pts[-1]) - abs(v_end)) > 1e-12:
        pts.append(v_end)
    return np.array(pts)


def _arm(solver: DeviceSolver, start: SolutionState, targets, limit: float, step_min: float):
    """Walk outward from ``start`` through ``targets``; returns records and a partial flag."""
    records = []
    state = start
    for target in targets:
        try:
            state = _reach(solver, state, target, step_min)
        except ConvergenceError as exc:
            log.warning("sweep point %.4g V failed: %s", target, exc)
            records.append((target, float("nan"), False, False))
            return records, True
        j = state.current_density
        if abs(j) >= limit:
            records.append((target, math.copysign(limit, j), True, True))
            return records, False
        records.append((target, j, False, True))
    return records, False


def _reach(solver: DeviceSolver, state: SolutionState, target: float, step_min: float) -> SolutionState:
    """Move from ``state`` to ``target``, halving the substep on failure."""
    v = state.applied_bias
    step = target - v
    while True:
        nxt = v + step if abs(target - v) > abs(step) else target
        try:
            state = solver.solve(nxt, state)
        except ConvergenceError as exc:
            step /= 2.0
            if abs(step) < step_min:
                raise ConvergenceError(f"step fell below {step_min} V at {nxt} V",
                                       exc.residual_history, nxt, step) from exc
            continue
        v = nxt
        if v == target:
            return state


def iv_sweep(device: DeviceStructure, temperature: float, v_from: float, v_to: float,
             flags: Optional[PhysicsFlags] = None, config: Optional[SolverConfig] = None,
             compliance: Optional[Compliance] = None, step: Optional[float] = None,
             solver: Optional[DeviceSolver] = None) -> IVCurve:
    """Adaptive continuation sweep from equilibrium toward both ends of the range.

    Points are placed on multiples of ``step`` (default the configured initial
    step). The first point reaching compliance ends its arm with the current
    clamped to the limit. A failed point is kept as NaN and marks the curve partial.
    """
    solver = solver or DeviceSolver(device, temperature, flags, config)
    cfg = solver.config
    step = step or cfg.bias_step_initial
    if not step > 0:
        raise ConfigurationError("sweep step must be positive")
    compliance = compliance or Compliance()
    limit = compliance.limit_density(device.area)
    lo, hi = min(v_from, v_to), max(v_from, v_to)
    eq = solver.equilibrium()
    records = []
    partial = False
    if lo <= 0.0 <= hi:
        records.append((0.0, 0.0, False, True))
    if hi > 0:
        start = eq
        targets = _grid(hi, step)
        if lo > 0:
            # range excludes 0: walk silently up to lo, then record
            targets = targets[targets >= lo - 1e-12]
            start = _reach(solver, eq, float(targets[0]), cfg.bias_step_min)
        r, p = _arm(solver, start, targets, limit, cfg.bias_step_min)
        records += r
        partial |= p
    if lo < 0:
        start = eq
        targets = _grid(lo, step)
        if hi < 0:
            targets = targets[targets <= hi + 1e-12]
            start = _reach(solver, eq, float(targets[0]), cfg.bias_step_min)
        r, p = _arm(solver, start, targets, limit, cfg.bias_step_min)
        records += r
        partial |= p
    v, j, comp, conv = (np.array(x) for x in zip(*records)) if records else ([],) * 4
    return IVCurve(v, j, temperature, comp, conv, device=device.name, partial=partial,
                   compliance_density=limit if math.isfinite(limit) else None)
