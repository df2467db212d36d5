"""I-V and C-V curve containers with a commented-header CSV format."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import ExtractionError

VOLTAGE_COLUMNS = ("voltage_V", "voltage", "bias", "V")
CURRENT_COLUMNS = ("current_density_A_cm2", "current_density", "J", "current")
CAPACITANCE_COLUMNS = ("capacitance_F_cm2", "capacitance", "C")


class CurveFormatError(ExtractionError):
    """A curve file could not be parsed."""


@dataclass(frozen=True)
class IVCurve:
    bias: np.ndarray
    current_density: np.ndarray
    temperature: float
    compliance_hit: np.ndarray = None
    converged: np.ndarray = None
    device: str = ""
    partial: bool = False
    compliance_density: Optional[float] = None

    def __post_init__(self):
        bias = np.asarray(self.bias, dtype=float)
        j = np.asarray(self.current_density, dtype=float)
        if bias.shape != j.shape or bias.ndim != 1:
            raise ValueError("bias and current_density must be equal-length 1D arrays")
        comp = np.zeros(len(bias), bool) if self.compliance_hit is None else np.asarray(self.compliance_hit, bool)
        conv = np.ones(len(bias), bool) if self.converged is None else np.asarray(self.converged, bool)
        order = np.argsort(bias, kind="stable")
        object.__setattr__(self, "bias", bias[order])
        object.__setattr__(self, "current_density", j[order])
        object.__setattr__(self, "compliance_hit", comp[order])
        object.__setattr__(self, "converged", conv[order])

    def __len__(self):
        return len(self.bias)

    @property
    def valid(self) -> np.ndarray:
        return self.converged & np.isfinite(self.current_density)


@dataclass(frozen=True)
class CVCurve:
    bias: np.ndarray
    capacitance_per_area: np.ndarray
    temperature: float
    device: str = ""
    partial: bool = False
    converged: np.ndarray = None

    def __post_init__(self):
        bias = np.asarray(self.bias, dtype=float)
        c = np.asarray(self.capacitance_per_area, dtype=float)
        if bias.shape != c.shape or bias.ndim != 1:
            raise ValueError("bias and capacitance must be equal-length 1D arrays")
        conv = np.ones(len(bias), bool) if self.converged is None else np.asarray(self.converged, bool)
        order = np.argsort(bias, kind="stable")
        object.__setattr__(self, "bias", bias[order])
        object.__setattr__(self, "capacitance_per_area", c[order])
        object.__setattr__(self, "converged", conv[order])

    def __len__(self):
        return len(self.bias)

    def scaled(self, factor: float) -> "CVCurve":
        return CVCurve(self.bias, self.capacitance_per_area * factor, self.temperature,
                       self.device, self.partial, self.converged)


# --------------------------------------------------------------------------
# CSV
# --------------------------------------------------------------------------

def _fmt(x) -> str:
    return repr(float(x))


def write_csv(path, columns: dict, header_lines: Sequence[str] = ()) -> None:
    """Write named columns with ``#``-prefixed header lines; output is deterministic."""
    names = list(columns)
    rows = zip(*[columns[k] for k in names])
    buf = io.StringIO()
    for line in header_lines:
        for sub in str(line).splitlines() or [""]:
            buf.write(f"# {sub}".rstrip() + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(names)
    for row in rows:
        writer.writerow([_fmt(v) if not isinstance(v, (bool, np.bool_, str)) else
                         (int(v) if not isinstance(v, str) else v) for v in row])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def iv_columns(curve: IVCurve) -> dict:
    return {
        "voltage_V": curve.bias,
        "current_density_A_cm2": curve.current_density,
        "compliance": curve.compliance_hit,
        "converged": curve.converged,
    }


def cv_columns(curve: CVCurve) -> dict:
    c = curve.capacitance_per_area
    return {
        "voltage_V": curve.bias,
        "capacitance_F_cm2": c,
        "inv_c2_cm4_F2": 1.0 / c**2,
        "converged": curve.converged,
    }


def _read_table(path):
    """Return (metadata, column names, rows as list of (line number, fields))."""
    meta, names, rows = {}, None, []
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            body = stripped[1:].strip()
            if ":" in body:
                key, _, val = body.partition(":")
                meta.setdefault(key.strip(), val.strip())
            continue
        fields = next(csv.reader([stripped]))
        if names is None:
            names = [f.strip() for f in fields]
        else:
            rows.append((lineno, fields))
    if names is None:
        raise CurveFormatError(f"{path}: no column header found", reason="empty")
    return meta, names, rows


def _pick(names, aliases, path, what):
    for a in aliases:
        if a in names:
            return names.index(a)
    raise CurveFormatError(f"{path}: missing {what} column (expected one of {', '.join(aliases)})",
                           reason=f"missing {what} column")


def _column(rows, idx, path, name):
    out = []
    for lineno, fields in rows:
        try:
            out.append(float(fields[idx]))
        except (IndexError, ValueError):
            raise CurveFormatError(f"{path}:{lineno}: cannot parse {name} value",
                                   reason="malformed row") from None
    return np.array(out)


def _temperature(meta, default):
    for key in ("temperature_K", "temperature"):
        if key in meta:
            try:
                return float(meta[key].split()[0])
            except ValueError:
                pass
    return default


def read_iv_csv(path, temperature: Optional[float] = None) -> IVCurve:
    meta, names, rows = _read_table(path)
    iv = _pick(names, VOLTAGE_COLUMNS, path, "voltage")
    ij = _pick(names, CURRENT_COLUMNS, path, "current")
    v = _column(rows, iv, path, "voltage")
    j = _column(rows, ij, path, "current")
    comp = _column(rows, names.index("compliance"), path, "compliance").astype(bool) \
        if "compliance" in names else None
    conv = _column(rows, names.index("converged"), path, "converged").astype(bool) \
        if "converged" in names else None
    t = _temperature(meta, temperature if temperature is not None else 300.0)
    return IVCurve(v, j, t, comp, conv, device=meta.get("device", ""))


def read_cv_csv(path, temperature: Optional[float] = None) -> CVCurve:
    meta, names, rows = _read_table(path)
    iv = _pick(names, VOLTAGE_COLUMNS, path, "voltage")
    ic = _pick(names, CAPACITANCE_COLUMNS, path, "capacitance")
    v = _column(rows, iv, path, "voltage")
    c = _column(rows, ic, path, "capacitance")
    t = _temperature(meta, temperature if temperature is not None else 300.0)
    return CVCurve(v, c, t, device=meta.get("device", ""))


def detect_kind(path) -> str:
    """'iv' or 'cv' from the column header."""
    _, names, _ = _read_table(path)
    if any(a in names for a in CAPACITANCE_COLUMNS):
        return "cv"
    if any(a in names for a in CURRENT_COLUMNS):
        return "iv"
    raise CurveFormatError(f"{path}: missing current or capacitance column", reason="unknown kind")
