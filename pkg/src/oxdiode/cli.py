"""Command-line front end.

Exit codes: 0 success, 1 solver failure, 2 configuration error, 3 extraction
error or failed hard comparison.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import yaml

from . import __version__
from .config import (OUTPUT_DIR_ENV, RunConfig, apply_override, config_from_dict, load_config)
from .curves import (cv_columns, detect_kind, iv_columns, read_cv_csv,
                     read_iv_csv, write_csv)
from .device import band_alignment
from .errors import ConfigurationError, ConvergenceError, DomainError, ExtractionError
from .extraction import extract_metrics
from .materials import GA2O3_EXTRACTION_PERMITTIVITY
from .reference import HETEROJUNCTION, REFERENCE, SCHOTTKY
from .smallsignal import cv_sweep
from .solver.core import DeviceSolver
from .solver.sweep import iv_sweep

log = logging.getLogger("oxdiode")

EXIT_OK, EXIT_SOLVER, EXIT_CONFIG, EXIT_EXTRACT = 0, 1, 2, 3


# --------------------------------------------------------------------------
# Output helpers
# --------------------------------------------------------------------------

def _header(cfg: RunConfig, device, temperature: Optional[float], extra=()) -> list:
    lines = [f"oxdiode {__version__}"]
    if device is not None:
        lines.append(f"device: {device.name}")
        lines.append(f"area_cm2: {device.area!r}")
    if temperature is not None:
        lines.append(f"temperature_K: {temperature!r}")
    lines.append("statistics: Boltzmann")
    lines += list(extra)
    resolved = cfg.to_dict()
    resolved["resolved_materials"] = {k: v.to_dict() for k, v in sorted(cfg.material_database().items())}
    lines.append("config:")
    lines += ["  " + ln for ln in yaml.safe_dump(resolved, sort_keys=True).splitlines()]
    return lines


def _write_curve(cfg: RunConfig, outdir: Path, stem: str, columns: dict, header: list) -> list:
    written = []
    if "csv" in cfg.formats:
        p = outdir / f"{stem}.csv"
        write_csv(p, columns, header)
        written.append(p.name)
    if "dat" in cfg.formats:
        p = outdir / f"{stem}.dat"
        names = list(columns)
        body = ["# " + ln for ln in header] + ["# " + " ".join(names)]
        for row in zip(*[columns[k] for k in names]):
            body.append(" ".join(repr(float(v)) for v in row))
        p.write_text("\n".join(body) + "\n", encoding="utf-8")
        written.append(p.name)
    return written


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    raise TypeError(type(obj))


def _clean(obj):
    """Replace non-finite floats so the JSON is standard."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def _dump_json(path: Optional[Path], payload: dict) -> str:
    text = json.dumps(_clean(payload), indent=2, sort_keys=True, default=_json_default) + "\n"
    if path is not None:
        path.write_text(text, encoding="utf-8")
    return text


# --------------------------------------------------------------------------
# Workers (module level so they pickle for the process pool)
# --------------------------------------------------------------------------

def _stem(device_name: str, kind: str, temperature: float) -> str:
    return f"{device_name}_{kind}_{temperature:.2f}K"


def run_job(cfg: RunConfig, device_index: int, temperature: float, task: str,
            with_cv: bool = False) -> dict:
    """Run one (device, temperature, task) unit and return curves plus metrics."""
    device = cfg.build_devices()[device_index]
    solver = DeviceSolver(device, temperature, cfg.physics, cfg.solver,
                          mesh=None if cfg.mesh is None else _mesh(device, cfg))
    out = {"device": device.name, "temperature_K": temperature, "task": task}
    if task == "band-diagram":
        eq = solver.equilibrium()
        out["band"] = {k: v.tolist() for k, v in solver.band_diagram(eq).items()}
        align = band_alignment(device, temperature)
        out["alignment"] = {
            "top_barrier_eV": align.top_barrier,
            "interfaces": [dict(upper=i.upper, lower=i.lower, delta_ec_eV=i.delta_ec,
                                delta_ev_eV=i.delta_ev, classification=i.classification)
                           for i in align.interfaces],
        }
        return out
    iv = cv = None
    ex = cfg.extraction
    if task == "simulate-iv":
        rng = cfg.iv
        iv = iv_sweep(device, temperature, rng.v_from, rng.v_to, compliance=cfg.compliance,
                      step=rng.step, solver=solver)
        out["iv"] = {k: np.asarray(v).tolist() for k, v in iv_columns(iv).items()}
        out["iv_partial"] = iv.partial
        if iv.partial and not iv.converged[iv.bias != 0].any():
            raise ConvergenceError(f"{device.name} at {temperature:.2f} K: every I-V point failed")
    if task == "simulate-cv" or with_cv:
        rng = cfg.cv
        cv = cv_sweep(device, temperature, rng.v_from, rng.v_to, rng.step,
                      delta_v=cfg.cv_delta_v, solver=solver)
        out["cv"] = {k: np.asarray(v).tolist() for k, v in cv_columns(cv).items()}
        out["cv_partial"] = cv.partial
        if len(cv) == 0:
            raise ConvergenceError(f"{device.name} at {temperature:.2f} K: every C-V point failed")
    metrics = extract_metrics(iv, cv, permittivity=ex.permittivity, threshold=ex.turn_on_threshold,
                              window=tuple(ex.ideality_window), noise_floor=ex.noise_floor,
                              v_probe=ex.rectification_probe, smoothing=ex.smoothing_window,
                              ms_fraction=ex.mott_schottky_fraction)
    metrics.device = device.name
    metrics.temperature = temperature
    metrics.provenance["compliance"] = cfg.compliance.describe(device.area)
    out["metrics"] = metrics.to_dict()
    return out


def _mesh(device, cfg):
    from .device import build_mesh
    return build_mesh(device, cfg.mesh)


def _run_all(cfg: RunConfig, task: str, jobs: int, with_cv: bool = False) -> list:
    units = [(i, t) for i in range(len(cfg.devices)) for t in cfg.temperatures_k]
    if jobs > 1 and len(units) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(run_job, cfg, i, t, task, with_cv) for i, t in units]
            return [f.result() for f in futures]
    return [run_job(cfg, i, t, task, with_cv) for i, t in units]


def _emit(cfg: RunConfig, results: list, task: str) -> dict:
    outdir = cfg.resolved_output_dir
    outdir.mkdir(parents=True, exist_ok=True)
    devices = {d.name: d for d in cfg.build_devices()}
    summary = []
    for res in results:
        dev = devices[res["device"]]
        t = res["temperature_K"]
        files = []
        if "band" in res:
            al = res["alignment"]
            extra = [f"top_barrier_eV: {al['top_barrier_eV']!r}"]
            for i in al["interfaces"]:
                extra.append(f"interface {i['upper']}/{i['lower']}: dEc={i['delta_ec_eV']!r} eV "
                             f"dEv={i['delta_ev_eV']!r} eV {i['classification']}")
            files += _write_curve(cfg, outdir, _stem(dev.name, "band", t), res["band"],
                                  _header(cfg, dev, t, extra))
        if "iv" in res:
            extra = [f"compliance: {cfg.compliance.describe(dev.area)}", f"partial: {res['iv_partial']}"]
            files += _write_curve(cfg, outdir, _stem(dev.name, "iv", t), res["iv"],
                                  _header(cfg, dev, t, extra))
        if "cv" in res:
            extra = [f"partial: {res['cv_partial']}"]
            files += _write_curve(cfg, outdir, _stem(dev.name, "cv", t), res["cv"],
                                  _header(cfg, dev, t, extra))
        entry = {"device": dev.name, "temperature_K": t, "files": files}
        if "metrics" in res:
            entry["metrics"] = res["metrics"]
        if "alignment" in res:
            entry["alignment"] = res["alignment"]
        summary.append(entry)
    payload = {"oxdiode_version": __version__, "task": task, "config": cfg.to_dict(),
               "results": summary}
    if "json" in cfg.formats:
        _dump_json(outdir / f"{task}_metrics.json", payload)
    return payload


# --------------------------------------------------------------------------
# Comparison
# --------------------------------------------------------------------------

def _close(t, target, tol=1.5):
    return abs(t - target) <= tol


def compare_rows(payload: dict) -> list:
    """Build (label, simulated, reference, status, hard) rows from a metrics payload."""
    results = payload.get("results") if isinstance(payload, dict) else None
    if not results:
        raise ConfigurationError("nothing to compare")
    by = {}
    for r in results:
        m = r.get("metrics")
        if m:
            by.setdefault(r["device"], {})[float(r["temperature_K"])] = m
    for name in (SCHOTTKY, HETEROJUNCTION):
        if name not in by:
            raise ConfigurationError(f"metrics for preset {name!r} are missing")
    s, h = by[SCHOTTKY], by[HETEROJUNCTION]
    temps = sorted(set(s) & set(h))
    rows = []

    def fmt(x, unit=""):
        return "n/a" if x is None else f"{x:.4g}{unit}"

    # soft rows: simulated against the measured reference
    for obs in REFERENCE.entries:
        m = by.get(obs.device, {})
        match = [t for t in m if obs.temperature is None or _close(t, obs.temperature, 5.0)]
        if not match:
            continue
        sim = m[match[0]].get(obs.quantity)
        sim_txt = fmt(sim)
        if obs.quantity == "rectification_ratio" and m[match[0]].get("rectification_lower_bound"):
            sim_txt = "≥ " + sim_txt
        label = f"{obs.device} {obs.quantity} @ {match[0]:.0f} K"
        rows.append((label, sim_txt, f"{'>' if obs.qualifier == '>' else '~'} {obs.value:g}", "info", False))

    # hard rows
    ref_gap = (REFERENCE.get("mott_schottky_vbi", HETEROJUNCTION).value
               - REFERENCE.get("mott_schottky_vbi", SCHOTTKY).value)
    rows.append(("HJ V_bi - Schottky V_bi >= 0.4 V (measured reference)", f"{ref_gap:.3g} V", ">= 0.4 V",
                 "PASS" if ref_gap >= 0.4 else "FAIL", True))

    von_s = [s[t].get("v_on") for t in temps]
    von_h = [h[t].get("v_on") for t in temps]
    if len(temps) >= 2:
        ok = all(v is not None for v in von_s) and all(a > b for a, b in zip(von_s, von_s[1:]))
        rows.append(("Schottky V_on strictly decreasing in T", ", ".join(fmt(v) for v in von_s),
                     "decreasing", "PASS" if ok else "FAIL", True))
    ok = all(a is not None and b is not None and b > a for a, b in zip(von_s, von_h))
    rows.append(("HJ V_on > Schottky V_on at every T",
                 "; ".join(f"{fmt(b)} vs {fmt(a)}" for a, b in zip(von_s, von_h)), "HJ higher",
                 "PASS" if ok else "FAIL", True))
    hot = [t for t in temps if _close(t, 683.15)]
    if hot:
        t = hot[0]
        v = s[t].get("v_on")
        rows.append((f"Schottky V_on in [0.3, 0.6] V @ {t:.0f} K", fmt(v, " V"), "[0.3, 0.6] V",
                     "PASS" if v is not None and 0.3 <= v <= 0.6 else "FAIL", True))
        vh = h[t].get("v_on")
        gap = None if v is None or vh is None else vh - v
        rows.append((f"HJ - Schottky V_on gap >= 0.2 V @ {t:.0f} K", fmt(gap, " V"), ">= 0.2 V",
                     "PASS" if gap is not None and gap >= 0.2 else "FAIL", True))
    cold = [t for t in temps if _close(t, 298.15, 2.0)]
    if hot and cold:
        r0, r1 = s[cold[0]].get("rectification_ratio"), s[hot[0]].get("rectification_ratio")
        drop = None if not r0 or not r1 else r0 / r1
        rows.append(("Schottky rectification drop >= 1e3 (room T to 683 K)", fmt(drop), ">= 1e3",
                     "PASS" if drop is not None and drop >= 1e3 else "FAIL", True))
    leak_ok = True
    cells = []
    for t in temps:
        ls, lh = s[t].get("leakage_at_minus3V"), h[t].get("leakage_at_minus3V")
        floor = h[t].get("provenance", {}).get("noise_floor_A_cm2", 1e-8)
        tag = fmt(lh)
        if lh is not None and lh < floor:
            tag += f" (below floor, ratio ≥ {fmt(h[t].get('rectification_ratio'))})"
        cells.append(f"{tag} vs {fmt(ls)}")
        leak_ok &= ls is not None and lh is not None and lh < ls
    rows.append(("HJ reverse J(-3 V) below Schottky at every T", "; ".join(cells), "HJ lower",
                 "PASS" if leak_ok else "FAIL", True))
    return rows


def format_report(rows: list) -> str:
    w = max(len(r[0]) for r in rows)
    lines = [f"{'check'.ljust(w)} | simulated | reference | status"]
    lines.append("-" * len(lines[0]))
    for label, sim, ref, status, hard in rows:
        tag = f"{status} [hard]" if hard else status
        lines.append(f"{label.ljust(w)} | {sim} | {ref} | {tag}")
    return "\n".join(lines)


# --------------------------------------------------------------------------
# Subcommands
# --------------------------------------------------------------------------

def _resolve_config(args) -> RunConfig:
    data = {}
    if getattr(args, "config", None):
        cfg = load_config(args.config)
        data = cfg.to_dict()
    for a in getattr(args, "set", None) or []:
        apply_override(data, a)
    if getattr(args, "preset", None):
        data["devices"] = list(args.preset)
    if getattr(args, "temperatures", None):
        data["temperatures"] = list(args.temperatures)
        data["temperature_unit"] = "K" if args.kelvin else "C"
    if getattr(args, "output_dir", None):
        data["output_dir"] = args.output_dir
    if getattr(args, "format", None):
        data["formats"] = list(args.format)
    sweep = {}
    for key in ("v_from", "v_to", "step"):
        val = getattr(args, key, None)
        if val is not None:
            sweep[key] = val
    if sweep:
        section = "cv" if args.command == "simulate-cv" else "iv"
        base = dict(data.get(section) or RunConfig().to_dict()[section])
        base.update(sweep)
        data[section] = base
    if getattr(args, "compliance_current", None) is not None:
        data["compliance"] = {"current_A": args.compliance_current}
    if getattr(args, "compliance_density", None) is not None:
        data["compliance"] = {"density_A_cm2": args.compliance_density}
    return config_from_dict(data)


def cmd_band_diagram(args) -> int:
    cfg = _resolve_config(args)
    payload = _emit(cfg, _run_all(cfg, "band-diagram", args.jobs), "band-diagram")
    for r in payload["results"]:
        print(f"{r['device']} @ {r['temperature_K']:.2f} K -> {', '.join(r['files'])}")
    return EXIT_OK


def _report_partial(payload) -> None:
    for r in payload["results"]:
        m = r.get("metrics") or {}
        if m.get("partial"):
            log.warning("%s @ %.2f K: sweep is partial (unconverged points)", r["device"], r["temperature_K"])


def cmd_simulate_iv(args) -> int:
    cfg = _resolve_config(args)
    payload = _emit(cfg, _run_all(cfg, "simulate-iv", args.jobs, args.with_cv), "simulate-iv")
    _report_partial(payload)
    for r in payload["results"]:
        m = r["metrics"]
        print(f"{r['device']} @ {r['temperature_K']:.2f} K: V_on={m['v_on']} n_min={m['min_ideality']} "
              f"ratio={'>=' if m['rectification_lower_bound'] else ''}{m['rectification_ratio']}")
    return EXIT_OK


def cmd_simulate_cv(args) -> int:
    cfg = _resolve_config(args)
    payload = _emit(cfg, _run_all(cfg, "simulate-cv", args.jobs), "simulate-cv")
    _report_partial(payload)
    for r in payload["results"]:
        m = r["metrics"]
        print(f"{r['device']} @ {r['temperature_K']:.2f} K: V_bi={m['mott_schottky_vbi']} "
              f"N={m['mott_schottky_density']}")
    return EXIT_OK


def cmd_extract(args) -> int:
    results = []
    for path in args.files:
        kind = args.kind if args.kind != "auto" else detect_kind(path)
        if kind == "iv":
            curve = read_iv_csv(path, args.temperature)
            m = extract_metrics(iv=curve, permittivity=args.permittivity, noise_floor=args.noise_floor,
                                threshold=args.threshold, smoothing=args.smoothing or None)
        else:
            curve = read_cv_csv(path, args.temperature)
            m = extract_metrics(cv=curve, permittivity=args.permittivity, smoothing=args.smoothing or None)
        entry = m.to_dict()
        entry["source"] = Path(path).name
        results.append(entry)
    payload = {"oxdiode_version": __version__, "task": "extract", "results": results}
    text = _dump_json(Path(args.output) if args.output else None, payload)
    if not args.output:
        sys.stdout.write(text)
    failed = [r for r in results if r["errors"] and all(
        r[k] is None for k in ("v_on", "min_ideality", "mott_schottky_vbi"))]
    if failed:
        for r in failed:
            print(f"extraction failed for {r['source']}: {r['errors']}", file=sys.stderr)
        return EXIT_EXTRACT
    return EXIT_OK


def cmd_compare(args) -> int:
    try:
        payload = json.loads(Path(args.metrics).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read metrics {args.metrics}: {exc}") from exc
    rows = compare_rows(payload)
    report = format_report(rows)
    print(report)
    if args.output:
        Path(args.output).write_text(report + "\n", encoding="utf-8")
    return EXIT_EXTRACT if any(r[4] and r[3] != "PASS" for r in rows) else EXIT_OK


def cmd_show_config(args) -> int:
    cfg = _resolve_config(args)
    data = cfg.to_dict()
    data["resolved_materials"] = {k: v.to_dict() for k, v in sorted(cfg.material_database().items())}
    sys.stdout.write(yaml.safe_dump(data, sort_keys=True))
    print(f"# default output directory: ${OUTPUT_DIR_ENV} or {cfg.resolved_output_dir}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oxdiode", description=(
        "1D drift-diffusion simulation and figure-of-merit extraction for "
        "Ni/Ga2O3 Schottky and NiO/Ga2O3 heterojunction diodes."))
    parser.add_argument("--version", action="version", version=f"oxdiode {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, sweep=False):
        p.add_argument("--config", help="YAML run config")
        p.add_argument("--preset", action="append", help="device preset (repeatable)")
        p.add_argument("--temperatures", type=float, nargs="+", help="temperatures (C unless --kelvin)")
        p.add_argument("--kelvin", action="store_true", help="--temperatures are in K")
        p.add_argument("--output-dir", help=f"output directory (default ${OUTPUT_DIR_ENV})")
        p.add_argument("--format", action="append", choices=["csv", "json", "dat"])
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config field")
        p.add_argument("--jobs", type=int, default=1, help="worker processes")
        if sweep:
            p.add_argument("--v-from", type=float)
            p.add_argument("--v-to", type=float)
            p.add_argument("--step", type=float)

    p = sub.add_parser("band-diagram", help="equilibrium band diagrams")
    common(p)
    p.set_defaults(func=cmd_band_diagram)

    p = sub.add_parser("simulate-iv", help="I-V sweeps and metrics")
    common(p, sweep=True)
    p.add_argument("--compliance-current", type=float, help="absolute compliance in A")
    p.add_argument("--compliance-density", type=float, help="compliance in A/cm^2")
    p.add_argument("--with-cv", action="store_true", help="also run C-V and Mott-Schottky")
    p.set_defaults(func=cmd_simulate_iv)

    p = sub.add_parser("simulate-cv", help="quasi-static C-V sweeps")
    common(p, sweep=True)
    p.set_defaults(func=cmd_simulate_cv)

    p = sub.add_parser("extract", help="metrics from measured or simulated CSV curves")
    p.add_argument("files", nargs="+")
    p.add_argument("--kind", choices=["auto", "iv", "cv"], default="auto")
    p.add_argument("--temperature", type=float, help="K, when the file has no temperature header")
    p.add_argument("--permittivity", type=float, default=GA2O3_EXTRACTION_PERMITTIVITY)
    p.add_argument("--noise-floor", type=float, default=1e-8)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--smoothing", type=int, default=5, help="quadratic smoothing window, 0 disables")
    p.add_argument("--output")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("compare", help="compare metrics JSON against the measured reference")
    p.add_argument("metrics")
    p.add_argument("--output")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("show-config", help="print the fully resolved configuration")
    p.add_argument("--config")
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.set_defaults(func=cmd_show_config)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigurationError, DomainError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ExtractionError as exc:
        print(f"extraction error: {exc}", file=sys.stderr)
        return EXIT_EXTRACT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
