"""Poisson / drift-diffusion solver on a 1D mesh with doubled heterointerface nodes.

Carriers are carried as Slotboom variables: n = exp(log_a) w and p = exp(log_c) v,
where w = exp(E_Fn / V_T) and v = exp(-E_Fp / V_T). The equilibrium Fermi level
is the energy zero, so the electron energy of the band edge is E_c = -chi - psi.
The top contact sits at the applied bias V (its Fermi level is at -V) and the
bottom contact is grounded, so positive V forward-biases both reference diodes.
Continuity equations become conductance chains that are solved without
subtractive cancellation, which keeps currents of 1e-20 A/cm^2 resolvable next
to majority densities of 1e18 cm^-3.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import solve_banded

from ..constants import EPS0, K_B, Q
from ..device import DeviceStructure, Mesh1D, build_mesh, schottky_barrier
from ..errors import ConfigurationError, ConvergenceError, DomainError
from ..materials import (bandgap_at, effective_dos, emission_velocity, thermal_velocity,
                         _check_temperature)
from .numerics import log_bernoulli, solve_mmatrix_chain
from .physics import PhysicsFlags, schottky_boundary_flux, tat_enhancement

# exp() of a Slotboom variable must stay inside double range
_MAX_BIAS_OVER_VT = 650.0


@dataclass(frozen=True)
class SolverConfig:
    potential_tolerance: float = 1e-9  # V
    residual_tolerance: float = 1e-9  # relative quasi-Fermi update
    max_gummel_iterations: int = 400
    max_newton_iterations: int = 200
    damping_limit: float = 2.0  # multiples of V_T per Newton update
    bias_step_initial: float = 0.05  # V
    bias_step_min: float = 1e-3  # V
    series_resistance: Optional[float] = None  # ohm; None derives it from the stack
    contact_resistivity: float = 1e-5  # ohm cm^2, used for the derived default
    lumped_substrate_thickness: float = 2e-4  # cm, used for the derived default

    def __post_init__(self):
        for name in ("potential_tolerance", "residual_tolerance", "damping_limit",
                     "bias_step_initial", "bias_step_min"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be positive")
        if self.max_gummel_iterations < 1 or self.max_newton_iterations < 1:
            raise ConfigurationError("iteration limits must be >= 1")
        if self.series_resistance is not None and self.series_resistance < 0:
            raise ConfigurationError("series_resistance must be >= 0")
        if self.bias_step_min > self.bias_step_initial:
            raise ConfigurationError("bias_step_min must not exceed bias_step_initial")


def default_series_resistance(device: DeviceStructure, config: SolverConfig) -> float:
    """Lumped resistance of the substrate below the mesh plus a contact term."""
    if config.series_resistance is not None:
        return config.series_resistance
    bottom = device.layers[-1]
    mu = bottom.material.electron_mobility if bottom.net_doping >= 0 else bottom.material.hole_mobility
    dop = abs(bottom.net_doping)
    rho = 1.0 / (Q * mu * dop) if dop > 0 else 0.0
    return (rho * config.lumped_substrate_thickness + config.contact_resistivity) / device.area


# --------------------------------------------------------------------------
# Discretization
# --------------------------------------------------------------------------

@dataclass
class Discretization:
    """Site-based finite-volume data. Heterointerface nodes carry two sites."""

    device: DeviceStructure
    mesh: Mesh1D
    temperature: float
    vt: float
    site_node: np.ndarray
    site_layer: np.ndarray
    vol: np.ndarray
    chi: np.ndarray
    eg: np.ndarray
    ln_nc: np.ndarray
    ln_nv: np.ndarray
    ln_ni2: np.ndarray
    doping: np.ndarray
    tau_n: np.ndarray
    tau_p: np.ndarray
    d_n: np.ndarray  # per element
    d_p: np.ndarray
    eps: np.ndarray  # per element, F/cm
    elem_link: np.ndarray  # link index of each element
    iface_links: list  # (link index, node index)
    link_is_iface: np.ndarray
    v_emit_n: np.ndarray  # per link, emission velocity on the barrier side (0 for elements)
    v_emit_p: np.ndarray
    iface_high_n: np.ndarray  # per link, +1 if right site is the high-E_c side
    iface_high_p: np.ndarray
    traps: list  # (electron site, hole site, N_it, c_n0, c_p0, ln_nie2, et, mass_n, mass_p)
    tat_sites: np.ndarray
    tat_mass_n: np.ndarray
    tat_mass_p: np.ndarray

    @property
    def n_sites(self) -> int:
        return len(self.site_node)

    @property
    def x(self) -> np.ndarray:
        return self.mesh.node_positions


def discretize(device: DeviceStructure, temperature: float, flags: PhysicsFlags,
               mesh: Optional[Mesh1D] = None) -> Discretization:
    _check_temperature(temperature)
    mesh = mesh or build_mesh(device)
    vt = K_B * temperature
    x = mesh.node_positions
    h = np.diff(x)
    el = mesh.element_layer
    n_nodes = len(x)
    iface = set(mesh.interface_nodes)

    site_node, site_layer = [], []
    for i in range(n_nodes):
        if i in iface:
            site_node += [i, i]
            site_layer += [el[i - 1], el[i]]
        else:
            site_node.append(i)
            site_layer.append(el[min(i, len(el) - 1)] if i < len(el) else el[-1])
    site_node = np.array(site_node)
    site_layer = np.array(site_layer)
    ns = len(site_node)

    # element e joins the site at node e (layer el[e]) to the site at node e+1 (same layer)
    first_site = np.searchsorted(site_node, np.arange(n_nodes))
    left_site = np.array([first_site[e] + (1 if (e in iface and site_layer[first_site[e]] != el[e]) else 0)
                          for e in range(len(h))])
    elem_link = left_site  # link k joins sites k and k+1

    vol = np.zeros(ns)
    np.add.at(vol, left_site, 0.5 * h)
    np.add.at(vol, left_site + 1, 0.5 * h)

    layers = device.layers
    mats = [layer.material for layer in layers]
    eg_layer = np.array([bandgap_at(m, temperature) for m in mats])
    chi_layer = np.array([m.electron_affinity for m in mats])
    lnc = np.array([math.log(effective_dos(m.electron_effective_mass, temperature)) for m in mats])
    lnv = np.array([math.log(effective_dos(m.hole_effective_mass, temperature)) for m in mats])

    chi = chi_layer[site_layer]
    eg = eg_layer[site_layer]
    ln_nc = lnc[site_layer]
    ln_nv = lnv[site_layer]
    ln_ni2 = ln_nc + ln_nv - eg / vt
    doping = np.array([layers[k].net_doping for k in site_layer])
    tau_n = np.array([mats[k].srh_lifetime_n for k in site_layer])
    tau_p = np.array([mats[k].srh_lifetime_p for k in site_layer])
    d_n = np.array([mats[k].electron_mobility for k in el]) * vt
    d_p = np.array([mats[k].hole_mobility for k in el]) * vt
    eps = np.array([mats[k].relative_permittivity for k in el]) * EPS0

    n_links = ns - 1
    link_is_iface = np.ones(n_links, dtype=bool)
    link_is_iface[elem_link] = False
    v_emit_n = np.zeros(n_links)
    v_emit_p = np.zeros(n_links)
    high_n = np.zeros(n_links, dtype=int)
    high_p = np.zeros(n_links, dtype=int)
    iface_links = []
    traps = []
    for k in np.flatnonzero(link_is_iface):
        node = site_node[k]
        iface_links.append((int(k), int(node)))
        a, b = site_layer[k], site_layer[k + 1]
        ma, mb = mats[a], mats[b]
        ec_a, ec_b = -chi_layer[a], -chi_layer[b]
        ev_a, ev_b = ec_a - eg_layer[a], ec_b - eg_layer[b]
        # electrons: emission velocity of the high-E_c side
        hn = 1 if ec_b > ec_a else 0
        high_n[k] = hn
        v_emit_n[k] = emission_velocity((mb if hn else ma).electron_effective_mass, temperature)
        # holes see a barrier on the low-E_v side
        hp = 1 if ev_b < ev_a else 0
        high_p[k] = hp
        v_emit_p[k] = emission_velocity((mb if hp else ma).hole_effective_mass, temperature)
        if ma is not mb and flags.interface_trap_density > 0:
            se = k + 1 if ec_b < ec_a else k  # low E_c side supplies electrons
            sh = k + 1 if ev_b > ev_a else k  # high E_v side supplies holes
            me = mats[site_layer[se]].electron_effective_mass
            mh = mats[site_layer[sh]].hole_effective_mass
            sigma = flags.interface_capture_cross_section
            c_n = sigma * thermal_velocity(me, temperature)
            c_p = sigma * thermal_velocity(mh, temperature)
            ln_nie2 = (ln_nc[se] + ln_nv[sh]
                       - ((-chi[se]) - (-chi[sh] - eg[sh])) / vt)
            traps.append((se, sh, flags.interface_trap_density, c_n, c_p, ln_nie2,
                          flags.interface_trap_level, me, mh))

    tat_sites = np.zeros(ns, dtype=bool)
    if flags.tat and flags.tat_region > 0:
        hetero_x = [x[node] for k, node in iface_links if mats[site_layer[k]] is not mats[site_layer[k + 1]]]
        for xi in hetero_x:
            tat_sites |= np.abs(x[site_node] - xi) <= flags.tat_region * (1 + 1e-9)
    tat_mass_n = np.array([mats[k].electron_effective_mass for k in site_layer])
    tat_mass_p = np.array([mats[k].hole_effective_mass for k in site_layer])

    return Discretization(
        device=device, mesh=mesh, temperature=temperature, vt=vt,
        site_node=site_node, site_layer=site_layer, vol=vol, chi=chi, eg=eg,
        ln_nc=ln_nc, ln_nv=ln_nv, ln_ni2=ln_ni2, doping=doping, tau_n=tau_n, tau_p=tau_p,
        d_n=d_n, d_p=d_p, eps=eps, elem_link=elem_link, iface_links=iface_links,
        link_is_iface=link_is_iface, v_emit_n=v_emit_n, v_emit_p=v_emit_p,
        iface_high_n=high_n, iface_high_p=high_p, traps=traps, tat_sites=tat_sites,
        tat_mass_n=tat_mass_n, tat_mass_p=tat_mass_p,
    )


def _neutral_ln_n(disc: Discretization) -> np.ndarray:
    """ln n of the charge-neutral equilibrium state at every site."""
    nd = disc.doping
    ln_ni2 = disc.ln_ni2
    ni = np.exp(0.5 * ln_ni2)
    s = np.sqrt(nd * nd + 4.0 * ni * ni)
    out = np.empty_like(nd)
    pos = nd >= 0
    out[pos] = np.log(0.5 * (nd[pos] + s[pos]))
    out[~pos] = ln_ni2[~pos] - np.log(0.5 * (-nd[~pos] + s[~pos]))
    return out


def neutral_potential(disc: Discretization) -> np.ndarray:
    """Per-site potential giving local charge neutrality at equilibrium."""
    return disc.vt * (_neutral_ln_n(disc) - disc.ln_nc) - disc.chi


# --------------------------------------------------------------------------
# State
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SolutionState:
    """Converged operating point.

    ``psi`` is per mesh node; ``n``, ``p``, ``ln_w`` and ``ln_v`` are per site,
    with two sites at each heterointerface node (``site_node`` maps sites to nodes).
    """

    psi: np.ndarray
    n: np.ndarray
    p: np.ndarray
    ln_w: np.ndarray
    ln_v: np.ndarray
    site_node: np.ndarray
    temperature: float
    applied_bias: float
    internal_bias: float
    converged: bool
    residual_norm: float
    current_density: float
    iterations: int = 0
    residual_history: tuple = field(default_factory=tuple)

    @property
    def efn(self) -> np.ndarray:
        return K_B * self.temperature * self.ln_w

    @property
    def efp(self) -> np.ndarray:
        return -K_B * self.temperature * self.ln_v


class DeviceSolver:
    """Owns the discretization for one (device, temperature, flags) triple."""

    def __init__(self, device: DeviceStructure, temperature: float,
                 flags: Optional[PhysicsFlags] = None, config: Optional[SolverConfig] = None,
                 mesh: Optional[Mesh1D] = None):
        self.device = device
        self.flags = flags or PhysicsFlags()
        self.config = config or SolverConfig()
        self.disc = discretize(device, temperature, self.flags, mesh)
        self.temperature = temperature
        self.vt = self.disc.vt
        self.psi_neutral_site = neutral_potential(self.disc)
        d = self.disc
        top, bot = device.top_contact, device.bottom_contact
        self.top_barrier = None
        self.bottom_barrier = None
        if top.kind == "schottky":
            self.top_barrier = schottky_barrier(top.work_function, device.layers[0].material)
            if self.top_barrier <= 0:
                raise ConfigurationError("top schottky barrier must be positive")
        if bot.kind == "schottky":
            self.bottom_barrier = schottky_barrier(bot.work_function, device.layers[-1].material)
            if self.bottom_barrier <= 0:
                raise ConfigurationError("bottom schottky barrier must be positive")
        self.series_resistance = default_series_resistance(device, self.config)
        self._h = np.diff(d.x)

    # ---- boundary values -------------------------------------------------
    def _contact_psi(self, bias: float):
        d = self.disc
        if self.top_barrier is not None:
            top = bias - self.top_barrier - d.chi[0]
        else:
            top = self.psi_neutral_site[0] + bias
        if self.bottom_barrier is not None:
            bot = -self.bottom_barrier - d.chi[-1]
        else:
            bot = self.psi_neutral_site[-1]
        return top, bot

    def initial_psi(self, bias: float = 0.0) -> np.ndarray:
        d = self.disc
        psi = np.zeros(len(d.x))
        cnt = np.zeros(len(d.x))
        np.add.at(psi, d.site_node, self.psi_neutral_site)
        np.add.at(cnt, d.site_node, 1.0)
        psi /= cnt
        psi[0], psi[-1] = self._contact_psi(bias)
        return psi

    # ---- elementary quantities -------------------------------------------
    def log_weights(self, psi: np.ndarray):
        d = self.disc
        ps = psi[d.site_node]
        log_a = d.ln_nc + (d.chi + ps) / self.vt
        log_c = d.ln_nv - (d.chi + d.eg + ps) / self.vt
        return log_a, log_c

    def fields(self, psi: np.ndarray) -> np.ndarray:
        """Electric field per element, V/cm (positive along +x)."""
        return -np.diff(psi) / self._h

    def site_field(self, psi: np.ndarray) -> np.ndarray:
        d = self.disc
        f = np.abs(self.fields(psi))
        acc = np.zeros(d.n_sites)
        cnt = np.zeros(d.n_sites)
        el = d.elem_link
        np.add.at(acc, el, f)
        np.add.at(acc, el + 1, f)
        np.add.at(cnt, el, 1.0)
        np.add.at(cnt, el + 1, 1.0)
        return acc / np.maximum(cnt, 1.0)

    def link_conductances(self, psi: np.ndarray, log_a, log_c):
        d = self.disc
        n_links = d.n_sites - 1
        g = np.empty(n_links)
        hcond = np.empty(n_links)
        el = d.elem_link
        da = log_a[el + 1] - log_a[el]
        g[el] = d.d_n / self._h * np.exp(log_a[el] + log_bernoulli(-da))
        dc = log_c[el + 1] - log_c[el]
        hcond[el] = d.d_p / self._h * np.exp(log_c[el] + log_bernoulli(-dc))
        for k, _node in d.iface_links:
            sn = k + d.iface_high_n[k]
            sp = k + d.iface_high_p[k]
            g[k] = d.v_emit_n[k] * math.exp(log_a[sn])
            hcond[k] = d.v_emit_p[k] * math.exp(log_c[sp])
        return g, hcond

    def _schottky_conductance(self, which: str, psi: np.ndarray, log_a, log_c):
        """Contact conductances (electrons, holes) multiplying (w_s - w_m)."""
        d = self.disc
        flags = self.flags
        if which == "top":
            s, barrier, layer = 0, self.top_barrier, self.device.layers[0]
            slope = (psi[1] - psi[0]) / self._h[0]
        else:
            s, barrier, layer = d.n_sites - 1, self.bottom_barrier, self.device.layers[-1]
            slope = (psi[-2] - psi[-1]) / self._h[-1]
        mat = layer.material
        bc = schottky_boundary_flux(barrier, self.temperature, mat.electron_effective_mass,
                                    flags, surface_field=slope,
                                    relative_permittivity=mat.relative_permittivity)
        s_n = bc.velocity * math.exp(log_a[s])
        v_p = emission_velocity(mat.hole_effective_mass, self.temperature)
        s_p = v_p * math.exp(log_c[s])
        return s_n, s_p

    # ---- recombination ------------------------------------------------------
    def recombination_coefficients(self, psi, log_a, log_c, ln_w, ln_v):
        """Linearized recombination, R vol = K (w v - 1) per site.

        Returns (K, cross) where ``K`` is per site for bulk SRH and ``cross``
        lists interface-sheet terms (electron site, hole site, K_it).
        """
        d = self.disc
        flags = self.flags
        ns = d.n_sites
        kbulk = np.zeros(ns)
        if flags.srh:
            n = np.exp(log_a + ln_w)
            p = np.exp(log_c + ln_v)
            ni = np.exp(0.5 * d.ln_ni2)
            et = flags.bulk_trap_level / self.vt
            tn, tp = d.tau_n.copy(), d.tau_p.copy()
            if d.tat_sites.any():
                idx = np.flatnonzero(d.tat_sites)
                fs = self.site_field(psi)[idx]
                rng = flags.tat_energy_range
                for j, i in enumerate(idx):
                    tn[i] /= tat_enhancement(fs[j], self.temperature, d.tat_mass_n[i], rng)
                    tp[i] /= tat_enhancement(fs[j], self.temperature, d.tat_mass_p[i], rng)
            den = tp * (n + ni * math.exp(et)) + tn * (p + ni * math.exp(-et))
            kbulk = np.exp(d.ln_ni2) / den * d.vol
        cross = []
        for se, sh, nit, c_n, c_p, ln_nie2, et_it, me, mh in d.traps:
            n = math.exp(log_a[se] + ln_w[se])
            p = math.exp(log_c[sh] + ln_v[sh])
            nie = math.exp(0.5 * ln_nie2)
            if flags.tat:
                f_n = self.site_field(psi)[se]
                f_p = self.site_field(psi)[sh]
                c_n = c_n * tat_enhancement(f_n, self.temperature, me, flags.tat_energy_range)
                c_p = c_p * tat_enhancement(f_p, self.temperature, mh, flags.tat_energy_range)
            et = et_it / self.vt
            den = (n + nie * math.exp(et)) / c_p + (p + nie * math.exp(-et)) / c_n
            cross.append((se, sh, nit * math.exp(ln_nie2) / den))
        return kbulk, cross

    # ---- Poisson ---------------------------------------------------------
    def solve_poisson(self, psi0: np.ndarray, ln_w: np.ndarray, ln_v: np.ndarray,
                      bias: float, max_iter: Optional[int] = None):
        d = self.disc
        cfg = self.config
        psi = psi0.copy()
        psi[0], psi[-1] = self._contact_psi(bias)
        coef = d.eps / Q / self._h  # per element
        n_nodes = len(psi)
        qfix = np.zeros(n_nodes)
        for _k, node in d.iface_links:
            qfix[node] += self.flags.interface_fixed_charge
        limit = cfg.damping_limit * self.vt
        history = []
        for it in range(max_iter or cfg.max_newton_iterations):
            log_a, log_c = self.log_weights(psi)
            n = np.exp(log_a + ln_w)
            p = np.exp(log_c + ln_v)
            rho = (p - n + d.doping) * d.vol
            drho = -(p + n) / self.vt * d.vol
            charge = np.bincount(d.site_node, rho, n_nodes) + qfix
            dcharge = np.bincount(d.site_node, drho, n_nodes)
            flux = coef * np.diff(psi)
            res = charge.copy()
            res[:-1] += flux
            res[1:] -= flux
            diag = dcharge.copy()
            diag[:-1] -= coef
            diag[1:] -= coef
            # interior unknowns only
            r = res[1:-1]
            ab = np.zeros((3, n_nodes - 2))
            ab[0, 1:] = coef[1:-1]
            ab[1, :] = diag[1:-1]
            ab[2, :-1] = coef[1:-1]
            delta = solve_banded((1, 1), ab, -r)
            delta = np.clip(delta, -limit, limit)
            psi[1:-1] += delta
            step = float(np.max(np.abs(delta))) if len(delta) else 0.0
            history.append(step)
            if step < cfg.potential_tolerance * 1e-2:
                return psi, history
        if history and history[-1] < cfg.potential_tolerance:
            return psi, history
        raise ConvergenceError("Poisson Newton did not converge", history, bias)

    # ---- continuity -----------------------------------------------------------
    def _contact_slotboom(self, bias):
        vt = self.vt
        return -bias / vt, bias / vt  # ln w, ln v at the top contact

    def solve_electrons(self, psi, log_a, log_c, ln_w, ln_v, bias):
        g, _ = self.link_conductances(psi, log_a, log_c)
        kbulk, cross = self.recombination_coefficients(psi, log_a, log_c, ln_w, ln_v)
        v = np.exp(ln_v)
        shunt = kbulk * v
        rhs = kbulk.copy()
        for se, sh, kit in cross:
            shunt[se] += kit * v[sh]
            rhs[se] += kit
        return self._solve_chain(g, shunt, rhs, psi, log_a, log_c, bias, carrier="n")

    def solve_holes(self, psi, log_a, log_c, ln_w, ln_v, bias):
        _, hcond = self.link_conductances(psi, log_a, log_c)
        kbulk, cross = self.recombination_coefficients(psi, log_a, log_c, ln_w, ln_v)
        w = np.exp(ln_w)
        shunt = kbulk * w
        rhs = kbulk.copy()
        for se, sh, kit in cross:
            shunt[sh] += kit * w[se]
            rhs[sh] += kit
        return self._solve_chain(hcond, shunt, rhs, psi, log_a, log_c, bias, carrier="p")

    def _solve_chain(self, g, shunt, rhs, psi, log_a, log_c, bias, carrier):
        ln_top_w, ln_top_v = self._contact_slotboom(bias)
        top_val = math.exp(ln_top_w if carrier == "n" else ln_top_v)
        bot_val = 1.0
        ns = len(shunt)
        lo, hi = 0, ns
        shunt = shunt.copy()
        rhs = rhs.copy()
        if self.top_barrier is None:
            lo = 1
            shunt[1] += g[0]
            rhs[1] += g[0] * top_val
        else:
            s_n, s_p = self._schottky_conductance("top", psi, log_a, log_c)
            s = s_n if carrier == "n" else s_p
            shunt[0] += s
            rhs[0] += s * top_val
        if self.bottom_barrier is None:
            hi = ns - 1
            shunt[ns - 2] += g[ns - 2]
            rhs[ns - 2] += g[ns - 2] * bot_val
        else:
            s_n, s_p = self._schottky_conductance("bottom", psi, log_a, log_c)
            s = s_n if carrier == "n" else s_p
            shunt[ns - 1] += s
            rhs[ns - 1] += s * bot_val
        sol = solve_mmatrix_chain(g[lo:hi - 1], shunt[lo:hi], rhs[lo:hi])
        out = np.empty(ns)
        out[lo:hi] = np.log(sol)
        if lo == 1:
            out[0] = math.log(top_val)
        if hi == ns - 1:
            out[-1] = 0.0
        return out

    # ---- currents ------------------------------------------------------------
    def link_currents(self, psi, ln_w, ln_v):
        """Electron and hole current densities per link, A/cm^2 along +x."""
        log_a, log_c = self.log_weights(psi)
        g, hcond = self.link_conductances(psi, log_a, log_c)
        w = np.exp(ln_w)
        v = np.exp(ln_v)
        jn = Q * g * (w[1:] - w[:-1])
        jp = -Q * hcond * (v[1:] - v[:-1])
        return jn, jp

    def terminal_current(self, psi, ln_w, ln_v, bias) -> float:
        """Total current density from the minority-side fluxes plus recombination.

        J = J_n(top) + q sum(R vol) + q sum(U_it) + J_p(bottom). Each term is
        free of majority-carrier cancellation.
        """
        log_a, log_c = self.log_weights(psi)
        g, hcond = self.link_conductances(psi, log_a, log_c)
        w = np.exp(ln_w)
        v = np.exp(ln_v)
        kbulk, cross = self.recombination_coefficients(psi, log_a, log_c, ln_w, ln_v)
        wv = w * v
        rsum = kbulk * (wv - 1.0)
        ln_top_w, ln_top_v = self._contact_slotboom(bias)
        if self.top_barrier is None:
            jn_top = Q * g[0] * (w[1] - w[0]) - Q * rsum[0]
        else:
            s_n, _ = self._schottky_conductance("top", psi, log_a, log_c)
            jn_top = Q * s_n * (w[0] - math.exp(ln_top_w))
        if self.bottom_barrier is None:
            jp_bot = -Q * hcond[-1] * (v[-1] - v[-2]) - Q * rsum[-1]
        else:
            _, s_p = self._schottky_conductance("bottom", psi, log_a, log_c)
            jp_bot = -Q * s_p * (v[-1] - 1.0)
        total = jn_top + jp_bot + Q * float(np.sum(rsum))
        for se, sh, kit in cross:
            total += Q * kit * (w[se] * v[sh] - 1.0)
        return float(total)

    # ---- Gummel ----------------------------------------------------------------
    def _gummel(self, bias, psi, ln_w, ln_v):
        cfg = self.config
        if abs(bias) / self.vt > _MAX_BIAS_OVER_VT:
            raise DomainError(f"bias {bias} V exceeds the representable range at {self.temperature} K")
        history = []
        for it in range(1, cfg.max_gummel_iterations + 1):
            psi_new, _ = self.solve_poisson(psi, ln_w, ln_v, bias)
            log_a, log_c = self.log_weights(psi_new)
            ln_w_new = self.solve_electrons(psi_new, log_a, log_c, ln_w, ln_v, bias)
            ln_v_new = self.solve_holes(psi_new, log_a, log_c, ln_w_new, ln_v, bias)
            dpsi = float(np.max(np.abs(psi_new - psi)))
            dqf = float(max(np.max(np.abs(ln_w_new - ln_w)), np.max(np.abs(ln_v_new - ln_v))))
            psi, ln_w, ln_v = psi_new, ln_w_new, ln_v_new
            history.append(max(dpsi / cfg.potential_tolerance, dqf / cfg.residual_tolerance))
            if dpsi < cfg.potential_tolerance and dqf < cfg.residual_tolerance:
                return psi, ln_w, ln_v, it, history
        raise ConvergenceError(f"Gummel iteration did not converge at {bias} V", history, bias)

    def _state(self, psi, ln_w, ln_v, applied, internal, it, history, current=None):
        log_a, log_c = self.log_weights(psi)
        if current is None:
            current = self.terminal_current(psi, ln_w, ln_v, internal)
        return SolutionState(
            psi=psi, n=np.exp(log_a + ln_w), p=np.exp(log_c + ln_v), ln_w=ln_w, ln_v=ln_v,
            site_node=self.disc.site_node, temperature=self.temperature,
            applied_bias=applied, internal_bias=internal, converged=True,
            residual_norm=history[-1] if history else 0.0, current_density=current,
            iterations=it, residual_history=tuple(history))

    def equilibrium(self) -> SolutionState:
        ns = self.disc.n_sites
        zero = np.zeros(ns)
        psi, hist = self.solve_poisson(self.initial_psi(0.0), zero, zero, 0.0,
                                       max_iter=max(self.config.max_newton_iterations, 400))
        return self._state(psi, zero, zero.copy(), 0.0, 0.0, len(hist), hist, current=0.0)

    def solve_internal(self, bias: float, warm: SolutionState) -> SolutionState:
        psi, ln_w, ln_v, it, hist = self._gummel(bias, warm.psi.copy(), warm.ln_w.copy(),
                                                 warm.ln_v.copy())
        return self._state(psi, ln_w, ln_v, bias, bias, it, hist)

    def solve(self, bias: float, warm: Optional[SolutionState] = None) -> SolutionState:
        """Solve at an applied terminal bias, including the lumped series resistance."""
        if warm is None:
            warm = self.equilibrium()
        if bias == 0.0:
            if warm.applied_bias == 0.0 and warm.current_density == 0.0:
                return warm
        state = self.solve_internal(bias, warm)
        rs = self.series_resistance * self.device.area  # ohm cm^2
        if rs == 0.0 or state.current_density == 0.0:
            return state
        # fixed point on V_int = V - J(V_int) rs, secant-accelerated
        v_prev, f_prev = bias, -state.current_density * rs
        v_int = bias - state.current_density * rs
        for _ in range(50):
            state = self.solve_internal(v_int, state)
            f = bias - state.current_density * rs - v_int
            if abs(f) < self.config.potential_tolerance * 10:
                break
            denom = f - f_prev
            v_next = v_int + f if denom == 0 else v_int - f * (v_int - v_prev) / denom
            v_prev, f_prev, v_int = v_int, f, v_next
        else:
            raise ConvergenceError("series-resistance iteration did not converge", bias=bias)
        return SolutionState(**{**state.__dict__, "applied_bias": bias})

    # ---- diagnostics ---------------------------------------------------------
    def current_profile(self, state: SolutionState) -> np.ndarray:
        """Total current density on every link, A/cm^2."""
        jn, jp = self.link_currents(state.psi, state.ln_w, state.ln_v)
        total = jn + jp
        if self.disc.traps:
            # a trap sheet recombines carriers from the two sites of one
            # interface node, which carries current across that link
            log_a, log_c = self.log_weights(state.psi)
            _, cross = self.recombination_coefficients(state.psi, log_a, log_c, state.ln_w, state.ln_v)
            w, v = np.exp(state.ln_w), np.exp(state.ln_v)
            for se, sh, kit in cross:
                u = Q * kit * (w[se] * v[sh] - 1.0)
                total[min(se, sh)] += u if sh < se else -u
        return total

    def displacement(self, state: SolutionState) -> np.ndarray:
        """Electric displacement eps F per element, C/cm^2."""
        return self.disc.eps * self.fields(state.psi)

    def band_diagram(self, state: SolutionState) -> dict:
        d = self.disc
        ps = state.psi[d.site_node]
        ec = -d.chi - ps
        return {
            "x_nm": d.x[d.site_node] * 1e7,
            "Ec_eV": ec,
            "Ev_eV": ec - d.eg,
            "Efn_eV": state.efn,
            "Efp_eV": state.efp,
            "psi_V": ps,
            "n_cm3": state.n,
            "p_cm3": state.p,
        }


def solve_equilibrium(device: DeviceStructure, temperature: float,
                      flags: Optional[PhysicsFlags] = None,
                      config: Optional[SolverConfig] = None,
                      mesh: Optional[Mesh1D] = None) -> SolutionState:
    return DeviceSolver(device, temperature, flags, config, mesh).equilibrium()


def solve_bias(device: DeviceStructure, temperature: float, bias: float,
               flags: Optional[PhysicsFlags] = None, config: Optional[SolverConfig] = None,
               warm_start: Optional[SolutionState] = None,
               mesh: Optional[Mesh1D] = None) -> SolutionState:
    return DeviceSolver(device, temperature, flags, config, mesh).solve(bias, warm_start)
