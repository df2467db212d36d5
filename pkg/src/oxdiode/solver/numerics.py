"""Scharfetter-Gummel kernels and a cancellation-free tridiagonal M-matrix solver."""

from __future__ import annotations

import numpy as np

from ..constants import thermal_voltage

_SMALL = 1e-10


def bernoulli(x):
    """B(x) = x / (exp(x) - 1), stable for tiny and huge arguments."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = np.abs(x) < _SMALL
    big = x > 700.0
    neg = x < -700.0
    mid = ~(small | big | neg)
    out[small] = 1.0 - 0.5 * x[small]
    out[big] = x[big] * np.exp(-x[big])
    out[neg] = -x[neg]
    out[mid] = x[mid] / np.expm1(x[mid])
    return out if out.ndim else float(out)


def log_bernoulli(x):
    """ln B(x) without overflow for any finite x."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = np.abs(x) < 1e-6
    pos = (x > 0) & ~small
    neg = (x < 0) & ~small
    xs = x[small]
    out[small] = -0.5 * xs + xs * xs / 24.0
    xp = x[pos]
    out[pos] = np.log(xp) - xp - np.log(-np.expm1(-xp))
    xn = x[neg]
    out[neg] = np.log(-xn) - np.log(-np.expm1(xn))
    return out if out.ndim else float(out)


def sg_flux(n_left, n_right, psi_left, psi_right, mobility, spacing, temperature):
    """Scharfetter-Gummel particle flux between two nodes.

    F = (mu V_T / h) [B(d) n_right - B(-d) n_left] with d = (psi_left - psi_right) / V_T.

    With ``psi`` the electrostatic potential this is minus the hole particle
    current. Passing the electron potential energy ``-psi`` instead gives the
    electron current density divided by q, so J_n = q F.
    """
    vt = thermal_voltage(temperature)
    d = (np.asarray(psi_left, dtype=float) - np.asarray(psi_right, dtype=float)) / vt
    return mobility * vt / spacing * (bernoulli(d) * n_right - bernoulli(-d) * n_left)


def sg_conductance(log_weight_left, log_weight_right, diffusivity, spacing):
    """Element conductance for Slotboom variables.

    With densities written as n = exp(log_weight) * w and log_weight varying
    linearly across the element, the SG flux equals G (w_right - w_left).
    """
    d = np.asarray(log_weight_right, dtype=float) - np.asarray(log_weight_left, dtype=float)
    return diffusivity / spacing * np.exp(np.asarray(log_weight_left) + log_bernoulli(-d))


def solve_mmatrix_chain(link, shunt, rhs):
    """Solve a chain of conductances: (s_i + G_{i-1} + G_i) x_i - G_{i-1} x_{i-1} - G_i x_{i+1} = b_i.

    ``link`` has length N - 1 (G_i couples i and i+1), ``shunt`` and ``rhs``
    length N, all nonnegative. Elimination is done in series-conductance
    form so that every intermediate is a sum of nonnegative terms; the
    relative accuracy of the result does not degrade when the conductances
    span hundreds of decades.
    """
    g = np.asarray(link, dtype=float)
    s = np.asarray(shunt, dtype=float)
    b = np.asarray(rhs, dtype=float)
    n = len(s)
    e = np.empty(n)
    d = np.empty(n)
    y = np.empty(n)
    e[0] = s[0]
    y[0] = b[0]
    for i in range(n):
        if i > 0:
            gl = g[i - 1]
            denom = gl + e[i - 1]
            e[i] = s[i] + (gl * e[i - 1] / denom if denom > 0 else 0.0)
            y[i] = b[i] + gl * y[i - 1] / d[i - 1]
        d[i] = e[i] + (g[i] if i < n - 1 else 0.0)
    if not np.all(d > 0):
        raise ZeroDivisionError("singular conductance chain: no grounded node")
    x = np.empty(n)
    x[-1] = y[-1] / d[-1]
    for i in range(n - 2, -1, -1):
        x[i] = (y[i] + g[i] * x[i + 1]) / d[i]
    return x
