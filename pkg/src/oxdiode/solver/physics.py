"""Local transport models: SRH, trap-assisted tunneling, Schottky and heterointerface emission."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..constants import EPS0, HBAR, K_B, M0, Q
from ..errors import ConfigurationError
from ..materials import effective_dos, emission_velocity

NM = 1e-7


@dataclass(frozen=True)
class PhysicsFlags:
    """Switches and parameters for the optional transport models.

    The interface trap sheet sits on the heterointerface and recombines
    electrons from the low-E_c side with holes from the high-E_v side.
    ``interface_trap_level`` is measured from the midgap of that effective
    gap. TAT enhances SRH capture within ``tat_region`` of a heterointerface.
    """

    barrier_lowering: bool = False
    schottky_tunneling: bool = False
    srh: bool = True
    tat: bool = True
    interface_trap_density: float = 1e12  # cm^-2
    interface_trap_level: float = 0.0  # eV from midgap
    interface_capture_cross_section: float = 1e-17  # cm^2
    bulk_trap_level: float = 0.0  # eV from midgap
    tat_region: float = 10 * NM
    tat_energy_range: Optional[float] = None  # eV; None integrates to convergence
    interface_fixed_charge: float = 0.0  # cm^-2, elementary charges

    def __post_init__(self):
        if self.interface_trap_density < 0:
            raise ConfigurationError("interface_trap_density must be >= 0")
        if self.interface_capture_cross_section < 0:
            raise ConfigurationError("interface_capture_cross_section must be >= 0")
        if self.tat_region < 0:
            raise ConfigurationError("tat_region must be >= 0")
        if self.tat_energy_range is not None and self.tat_energy_range <= 0:
            raise ConfigurationError("tat_energy_range must be positive")


def srh_rate(n, p, n_i, tau_n, tau_p, trap_level_offset=0.0, temperature=300.0):
    """Shockley-Read-Hall net recombination rate in cm^-3 s^-1.

    R = (np - n_i^2) / (tau_p (n + n1) + tau_n (p + p1)).
    """
    kt = K_B * temperature
    n1 = n_i * np.exp(trap_level_offset / kt)
    p1 = n_i * np.exp(-trap_level_offset / kt)
    return (n * p - n_i * n_i) / (tau_p * (n + n1) + tau_n * (p + p1))


def characteristic_tat_field(temperature: float, mass_ratio: float) -> float:
    """F_Gamma = sqrt(24 m* (kT)^3) / (q hbar) in V/cm."""
    kt = K_B * Q * temperature
    return math.sqrt(24.0 * mass_ratio * M0 * kt**3) / (Q * HBAR) / 100.0


_GL_X, _GL_W = np.polynomial.legendre.leggauss(48)


def _hurkx_excess(k: float, u_max: float) -> float:
    """Integral of exp(u - k u^1.5) over [0, u_max] by panelled Gauss-Legendre."""
    u_peak = (2.0 / (3.0 * k)) ** 2
    # beyond max(4 u_peak, 135) the integrand is below e^-45 of its peak
    upper = min(u_max, max(4.0 * u_peak, 135.0))
    shift = max(u_peak / 3.0 if u_peak < upper else upper - k * upper**1.5, 0.0)
    if shift > 700:
        return math.inf
    width = k ** (-2.0 / 3.0)
    cuts = [0.0, upper]
    cuts += [c * u_peak for c in (0.5, 1.0, 1.5, 2.0)]
    cuts += [c * width for c in (0.05, 0.25, 1.0, 4.0)]
    # u = t^2 removes the u^1.5 cusp at the origin
    edges = np.sqrt(np.unique(np.clip(cuts, 0.0, upper)))
    lo, hi = edges[:-1, None], edges[1:, None]
    t = 0.5 * (hi - lo) * _GL_X + 0.5 * (hi + lo)
    vals = 2.0 * t * np.exp(t * t - k * t**3 - shift) * _GL_W
    return float(np.sum(0.5 * (hi - lo) * vals) * math.exp(shift))


def tat_enhancement(field, temperature: float, tunneling_mass_ratio: float,
                    energy_range: Optional[float] = None):
    """Hurkx field-enhancement factor Gamma >= 1 for SRH lifetimes.

    Gamma = 1 + int_0^{dE/kT} exp(u - K u^1.5) du with
    K = (4/3) sqrt(2 m*) (kT)^1.5 / (q hbar F). Effective lifetimes are tau / Gamma.
    """
    f = np.abs(np.asarray(field, dtype=float))
    f_gamma = characteristic_tat_field(temperature, tunneling_mass_ratio)
    u_max = math.inf if energy_range is None else energy_range / (K_B * temperature)
    out = np.ones_like(f)
    flat = out.reshape(-1)
    for i, fi in enumerate(f.reshape(-1)):
        if fi > 0:
            k = 2.0 / (3.0 * math.sqrt(3.0)) * f_gamma / fi
            flat[i] = 1.0 + _hurkx_excess(k, u_max)
    return out if out.ndim else float(out)


def image_force_lowering(field: float, relative_permittivity: float) -> float:
    """Schottky barrier lowering sqrt(qF / (4 pi eps)) in eV for a field in V/cm."""
    return math.sqrt(Q * abs(field) / (4.0 * math.pi * relative_permittivity * EPS0))


@dataclass(frozen=True)
class SchottkyBoundary:
    """Thermionic-emission boundary condition at a metal contact.

    ``velocity`` already includes the image-force factor exp(dphi/kT) and the
    tunneling factor, so J = q velocity (n_surface - equilibrium_density).
    """

    velocity: float
    equilibrium_density: float
    barrier_lowering: float
    tunneling_factor: float

    def current_density(self, n_surface):
        return Q * self.velocity * (np.asarray(n_surface) - self.equilibrium_density)


def schottky_boundary_flux(barrier: float, temperature: float, mass_ratio: float,
                           flags: Optional[PhysicsFlags] = None, surface_field: float = 0.0,
                           relative_permittivity: float = 10.0) -> SchottkyBoundary:
    """Build the thermionic-emission boundary for a barrier of height ``barrier`` eV.

    The surface field is positive when the bands bend toward the metal, the
    sign for which image-force lowering applies.
    """
    if not barrier > 0:
        raise ConfigurationError("schottky barrier must be positive")
    flags = flags or PhysicsFlags()
    kt = K_B * temperature
    v_r = emission_velocity(mass_ratio, temperature)
    n0 = effective_dos(mass_ratio, temperature) * math.exp(-barrier / kt)
    dphi = 0.0
    if flags.barrier_lowering and surface_field > 0:
        dphi = min(image_force_lowering(surface_field, relative_permittivity), barrier)
    tun = 1.0
    if flags.schottky_tunneling and surface_field > 0:
        tun = float(tat_enhancement(surface_field, temperature, mass_ratio, barrier - dphi))
    return SchottkyBoundary(v_r * math.exp(dphi / kt) * tun, n0, dphi, tun)


def hetero_interface_flux(n_low, n_high, delta_e: float, temperature: float,
                          mass_low: float, mass_high: float):
    """Net thermionic particle flux across a band offset, cm^-2 s^-1.

    ``n_low`` sits on the side with the lower band edge and ``n_high`` on the
    side with the higher one, ``delta_e >= 0`` being the step. The returned
    flux is positive from the high side to the low side:

        F = v_h n_high - v_l n_low exp(-delta_e / kT)

    with v_h = A*_h T^2 / (q N_c,h). The low-side velocity is v_h N_c,h / N_c,l
    so that the flux vanishes exactly when both sides share a quasi-Fermi level.
    """
    if delta_e < 0:
        raise ValueError("delta_e must be nonnegative; swap the sides")
    kt = K_B * temperature
    nc_h = effective_dos(mass_high, temperature)
    nc_l = effective_dos(mass_low, temperature)
    v_h = emission_velocity(mass_high, temperature)
    v_l = v_h * nc_h / nc_l
    return v_h * np.asarray(n_high) - v_l * np.asarray(n_low) * math.exp(-delta_e / kt)
