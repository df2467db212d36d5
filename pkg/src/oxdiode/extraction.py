"""Figures of merit from I-V and C-V curves, simulated or measured."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy.signal import savgol_filter

from .constants import EPS0, K_B, Q
from .curves import CVCurve, IVCurve
from .errors import ExtractionError

DEFAULT_IDEALITY_WINDOW = (1e-6, 1e-1)  # A/cm^2
DEFAULT_THRESHOLD = 0.5  # A/cm^2
DEFAULT_NOISE_FLOOR = 1e-8  # A/cm^2
DEFAULT_PROBE = 3.0  # V
DEFAULT_MS_FRACTION = 0.8


def _smooth(y: np.ndarray, window: Optional[int]) -> np.ndarray:
    if not window:
        return y
    if window < 3 or window % 2 == 0:
        raise ExtractionError("smoothing window must be an odd integer >= 3", reason="bad window")
    if len(y) < window:
        return y
    return savgol_filter(y, window, 2)


# --------------------------------------------------------------------------
# I-V
# --------------------------------------------------------------------------

def _forward(curve: IVCurve, include_compliance: bool = False):
    ok = curve.valid & (curve.bias > 0) & (curve.current_density > 0)
    if not include_compliance:
        ok &= ~curve.compliance_hit
    return curve.bias[ok], curve.current_density[ok]


def ideality_profile(curve: IVCurve, smoothing: Optional[int] = None):
    """n(V) = (1/V_T) dV/d(ln J) on forward points, by centered differences.

    Returns (bias, n) arrays. Compliance-clamped points are excluded.
    """
    v, j = _forward(curve)
    if len(v) < 3:
        raise ExtractionError("fewer than 3 usable forward points", reason="no exponential region")
    ln_j = _smooth(np.log(j), smoothing)
    slope = np.gradient(ln_j, v)
    with np.errstate(divide="ignore"):
        n = 1.0 / (K_B * curve.temperature * slope)
    return v, n


def min_ideality(curve: IVCurve, window=DEFAULT_IDEALITY_WINDOW,
                 smoothing: Optional[int] = None) -> float:
    """Minimum ideality over points whose current lies inside ``window``."""
    v, n = ideality_profile(curve, smoothing)
    _, j = _forward(curve)
    sel = (j >= window[0]) & (j <= window[1]) & np.isfinite(n) & (n > 0)
    if sel.sum() < 3:
        raise ExtractionError(f"fewer than 3 points with J in [{window[0]:g}, {window[1]:g}] A/cm^2",
                              reason="no exponential region")
    return float(np.min(n[sel]))


def turn_on_voltage(curve: IVCurve, threshold: float = DEFAULT_THRESHOLD) -> float:
    """Forward bias at which J first reaches ``threshold``, log-linear interpolation."""
    ok = curve.valid & (curve.bias >= 0)
    v, j = curve.bias[ok], curve.current_density[ok]
    hit = np.flatnonzero(j >= threshold)
    if len(hit) == 0:
        if curve.compliance_hit.any() and curve.compliance_density is not None \
                and curve.compliance_density < threshold:
            raise ExtractionError(f"compliance {curve.compliance_density:g} A/cm^2 reached before "
                                  f"the {threshold:g} A/cm^2 threshold", reason="compliance before threshold")
        raise ExtractionError(f"current never reaches {threshold:g} A/cm^2 up to {v.max() if len(v) else 0:g} V",
                              reason="max bias too low")
    k = hit[0]
    if j[k] == threshold or k == 0:
        return float(v[k])
    v0, v1, j0, j1 = v[k - 1], v[k], j[k - 1], j[k]
    if j0 <= 0:
        return float(v0 + (threshold - j0) * (v1 - v0) / (j1 - j0))
    frac = (math.log(threshold) - math.log(j0)) / (math.log(j1) - math.log(j0))
    return float(v0 + frac * (v1 - v0))


@dataclass(frozen=True)
class Rectification:
    ratio: float
    forward: float
    reverse: float
    floored: bool  # reverse magnitude replaced by the noise floor; ratio is a lower bound
    clamped: bool  # forward value is the compliance limit; ratio is a lower bound


def _value_at(curve: IVCurve, v_probe: float):
    ok = curve.valid
    v, j = curve.bias[ok], curve.current_density[ok]
    if len(v) == 0:
        raise ExtractionError("empty curve", reason="range not covered")
    if v.min() - 1e-9 <= v_probe <= v.max() + 1e-9:
        return float(np.interp(v_probe, v, j)), False
    # an arm ended at compliance: the instrument stays clamped beyond it
    arm = curve.compliance_hit[ok]
    if v_probe > v.max() and arm[-1]:
        return float(j[-1]), True
    if v_probe < v.min() and arm[0]:
        return float(j[0]), True
    raise ExtractionError(f"curve does not cover {v_probe:g} V", reason="range not covered")


def rectification_ratio(curve: IVCurve, v_probe: float = DEFAULT_PROBE,
                        noise_floor: float = DEFAULT_NOISE_FLOOR) -> Rectification:
    """|J(+v)| / max(|J(-v)|, noise_floor)."""
    jf, clamp_f = _value_at(curve, abs(v_probe))
    jr, _ = _value_at(curve, -abs(v_probe))
    denom = max(abs(jr), noise_floor)
    return Rectification(abs(jf) / denom, abs(jf), abs(jr), abs(jr) < noise_floor, clamp_f)


def leakage_current(curve: IVCurve, v_probe: float = -3.0) -> float:
    """Reverse current density magnitude at ``v_probe``."""
    j, _ = _value_at(curve, v_probe)
    return abs(j)


# --------------------------------------------------------------------------
# C-V
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class MottSchottkyFit:
    v_bi: float  # voltage-axis intercept of 1/C^2
    v_bi_corrected: float  # intercept + kT/q
    density: float
    slope: float
    intercept: float
    r_squared: float
    n_points: int


def mott_schottky_fit(curve: CVCurve, permittivity: float,
                      fraction: float = DEFAULT_MS_FRACTION) -> MottSchottkyFit:
    """Least-squares line through 1/C^2 vs V on the most-reverse ``fraction`` of points."""
    ok = np.isfinite(curve.capacitance_per_area) & (curve.capacitance_per_area > 0)
    v, c = curve.bias[ok], curve.capacitance_per_area[ok]
    if len(v) < 3:
        raise ExtractionError("fewer than 3 C-V points", reason="too few points")
    k = max(3, int(round(fraction * len(v))))
    v, c = v[:k], c[:k]  # bias is sorted ascending, so these are the most reverse
    y = 1.0 / c**2
    slope, intercept = np.polyfit(v, y, 1)
    if slope >= 0:
        raise ExtractionError("non-negative 1/C^2 slope: curve is not rectifying", reason="bad slope")
    resid = y - (slope * v + intercept)
    ss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss if ss > 0 else 1.0
    density = 2.0 / (Q * permittivity * EPS0 * abs(slope))
    v_bi = -intercept / slope
    return MottSchottkyFit(float(v_bi), float(v_bi + K_B * curve.temperature), float(density),
                           float(slope), float(intercept), r2, k)


def apparent_doping_profile(curve: CVCurve, permittivity: float,
                            smoothing: Optional[int] = None):
    """Depth w = eps/C and N(w) = -2 / (q eps d(1/C^2)/dV), pointwise.

    Returns (depth in cm, density in cm^-3), ordered by depth.
    """
    v, c = curve.bias, curve.capacitance_per_area
    if len(v) < 3:
        raise ExtractionError("fewer than 3 C-V points", reason="too few points")
    dc = np.diff(c)
    if not (np.all(dc > 0) or np.all(dc < 0)):
        raise ExtractionError("capacitance is not monotone in bias", reason="non-monotone")
    eps = permittivity * EPS0
    y = _smooth(1.0 / c**2, smoothing)
    dy = np.gradient(y, v)
    depth = eps / c
    density = -2.0 / (Q * eps * dy)
    order = np.argsort(depth)
    return depth[order], density[order]


# --------------------------------------------------------------------------
# Metrics
# --------------------------------------------------------------------------

@dataclass
class DiodeMetrics:
    device: str = ""
    temperature: float = 300.0
    v_on: Optional[float] = None
    min_ideality: Optional[float] = None
    rectification_ratio: Optional[float] = None
    rectification_lower_bound: bool = False
    leakage_at_minus3V: Optional[float] = None
    leakage_below_noise_floor: bool = False
    mott_schottky_vbi: Optional[float] = None
    mott_schottky_vbi_corrected: Optional[float] = None
    mott_schottky_density: Optional[float] = None
    partial: bool = False
    provenance: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def extract_metrics(iv: Optional[IVCurve] = None, cv: Optional[CVCurve] = None,
                    permittivity: float = 10.0, threshold: float = DEFAULT_THRESHOLD,
                    window=DEFAULT_IDEALITY_WINDOW, noise_floor: float = DEFAULT_NOISE_FLOOR,
                    v_probe: float = DEFAULT_PROBE, smoothing: Optional[int] = None,
                    ms_fraction: float = DEFAULT_MS_FRACTION) -> DiodeMetrics:
    """Run every applicable extractor; failures are recorded instead of raised."""
    if iv is None and cv is None:
        raise ExtractionError("nothing to extract", reason="no curves")
    src = iv if iv is not None else cv
    m = DiodeMetrics(device=src.device, temperature=src.temperature)
    m.provenance = {
        "ideality_window_A_cm2": list(window),
        "turn_on_threshold_A_cm2": threshold,
        "rectification_probe_V": v_probe,
        "noise_floor_A_cm2": noise_floor,
        "smoothing_window": smoothing,
        "mott_schottky_fraction": ms_fraction,
        "permittivity": permittivity,
    }

    def attempt(key, fn):
        try:
            return fn()
        except ExtractionError as exc:
            m.errors[key] = str(exc)
            return None

    if iv is not None:
        m.partial |= iv.partial
        m.v_on = attempt("v_on", lambda: turn_on_voltage(iv, threshold))
        m.min_ideality = attempt("min_ideality", lambda: min_ideality(iv, window, smoothing))
        rect = attempt("rectification_ratio", lambda: rectification_ratio(iv, v_probe, noise_floor))
        if rect is not None:
            m.rectification_ratio = rect.ratio
            m.rectification_lower_bound = rect.floored or rect.clamped
        leak = attempt("leakage_at_minus3V", lambda: leakage_current(iv, -3.0))
        if leak is not None:
            m.leakage_at_minus3V = leak
            m.leakage_below_noise_floor = leak < noise_floor
    if cv is not None:
        m.partial |= cv.partial
        fit = attempt("mott_schottky", lambda: mott_schottky_fit(cv, permittivity, ms_fraction))
        if fit is not None:
            m.mott_schottky_vbi = fit.v_bi
            m.mott_schottky_vbi_corrected = fit.v_bi_corrected
            m.mott_schottky_density = fit.density
            m.provenance["mott_schottky_r_squared"] = fit.r_squared
    return m
