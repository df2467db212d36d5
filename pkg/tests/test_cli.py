import json
import math

import numpy as np
import pytest

from oxdiode.cli import compare_rows, main
from oxdiode.constants import K_B
from oxdiode.curves import read_iv_csv
from oxdiode.errors import ConfigurationError
from oxdiode.smallsignal import depletion_capacitance


def load_table(path):
    lines = [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]
    names = lines[0].split(",")
    rows = np.array([[float(x) for x in ln.split(",")] for ln in lines[1:]])
    return {n: rows[:, k] for k, n in enumerate(names)}


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_show_config(capsys):
    code, out, _ = run(capsys, "show-config", "--set", "physics.tat=false")
    assert code == 0
    assert "tat: false" in out and "resolved_materials" in out and "electron_affinity: 3.618" in out


def test_band_diagram_heterojunction(capsys, tmp_path):
    code, out, _ = run(capsys, "band-diagram", "--preset", "heterojunction-fig2",
                       "--temperatures", "25", "410", "--output-dir", str(tmp_path))
    assert code == 0
    files = sorted(p.name for p in tmp_path.glob("*.csv"))
    assert files == ["heterojunction-fig2_band_298.15K.csv", "heterojunction-fig2_band_683.15K.csv"]
    for name in files:
        text = (tmp_path / name).read_text()
        assert "staggered" in text and "interface_trap_density" in text
        data = load_table(tmp_path / name)
        k = np.flatnonzero(np.isclose(data["x_nm"], 200.0))
        assert data["Ec_eV"][k[0]] - data["Ec_eV"][k[1]] == pytest.approx(2.168, abs=1e-3)


def test_band_diagram_uniform_slab_is_flat(capsys, tmp_path):
    cfg = tmp_path / "slab.yaml"
    cfg.write_text("devices:\n  - name: slab\n    layers:\n"
                   "      - {material: Ga2O3, thickness_nm: 300, donor_density: 1.0e17}\n"
                   "temperatures: [25]\n")
    code, _, _ = run(capsys, "band-diagram", "--config", str(cfg), "--output-dir", str(tmp_path))
    assert code == 0
    data = load_table(tmp_path / "slab_band_298.15K.csv")
    assert np.ptp(data["Ec_eV"]) < 1e-9


def test_invalid_material_exit_code(capsys, tmp_path):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text("devices:\n  - layers:\n      - {material: Unobtainium, thickness_nm: 100}\n")
    code, _, err = run(capsys, "band-diagram", "--config", str(cfg), "--output-dir", str(tmp_path))
    assert code == 2
    assert "Unobtainium" in err


def test_simulate_single_point(capsys, tmp_path):
    code, _, _ = run(capsys, "simulate-iv", "--preset", "schottky-fig1", "--temperatures", "25",
                     "--v-from", "0", "--v-to", "0", "--output-dir", str(tmp_path))
    assert code == 0
    curve = read_iv_csv(tmp_path / "schottky-fig1_iv_298.15K.csv")
    assert list(curve.bias) == [0.0] and list(curve.current_density) == [0.0]


def test_simulate_compliance_flagged(capsys, tmp_path):
    code, _, _ = run(capsys, "simulate-iv", "--preset", "schottky-fig1", "--temperatures", "25",
                     "--v-from", "0", "--v-to", "3", "--step", "0.1", "--compliance-current", "1e-3",
                     "--output-dir", str(tmp_path))
    assert code == 0
    curve = read_iv_csv(tmp_path / "schottky-fig1_iv_298.15K.csv")
    assert curve.compliance_hit[-1] and curve.compliance_hit.sum() == 1
    assert curve.current_density[-1] == pytest.approx(1e-3 / (math.pi * 1e-4))
    metrics = json.loads((tmp_path / "simulate-iv_metrics.json").read_text())
    assert "1 mA" in json.dumps(metrics) or "0.001 A" in json.dumps(metrics)


def test_total_solver_failure_exit_code(capsys, tmp_path):
    code, _, err = run(capsys, "simulate-iv", "--preset", "schottky-fig1", "--temperatures", "25",
                       "--v-from", "0", "--v-to", "0.2", "--set", "solver.max_gummel_iterations=1",
                       "--set", "solver.bias_step_min=0.02", "--output-dir", str(tmp_path))
    assert code == 1
    assert "solver failure" in err


def test_extract_synthetic_ideal_diode(capsys, tmp_path):
    v = np.linspace(0.0, 1.2, 61)
    j = 1e-14 * np.expm1(v / (K_B * 300.0))
    path = tmp_path / "diode.csv"
    path.write_text("# temperature_K: 300\nvoltage_V,current_density_A_cm2\n"
                    + "".join(f"{float(a)!r},{float(b)!r}\n" for a, b in zip(v, j)))
    code, out, _ = run(capsys, "extract", str(path))
    assert code == 0
    (res,) = json.loads(out)["results"]
    assert res["min_ideality"] == pytest.approx(1.00, abs=5e-3)


def test_extract_synthetic_cv(capsys, tmp_path):
    v = np.linspace(-4.0, 0.0, 41)
    c = depletion_capacitance(v, 1.3, 4e18, 12.4)
    path = tmp_path / "cv.csv"
    path.write_text("voltage_V,capacitance_F_cm2\n" + "".join(f"{float(a)!r},{float(b)!r}\n" for a, b in zip(v, c)))
    out_path = tmp_path / "m.json"
    code, _, _ = run(capsys, "extract", str(path), "--output", str(out_path))
    assert code == 0
    (res,) = json.loads(out_path.read_text())["results"]
    assert res["mott_schottky_vbi"] == pytest.approx(1.3, rel=1e-3)
    assert res["mott_schottky_density"] == pytest.approx(4e18, rel=1e-3)


def test_extract_missing_column(capsys, tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("voltage_V,resistance\n0,1\n")
    code, _, err = run(capsys, "extract", "--kind", "iv", str(path))
    assert code == 3
    assert "current" in err


def test_extract_malformed_line(capsys, tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("voltage_V,current_density_A_cm2\n0,0\n0.1,x\n")
    code, _, err = run(capsys, "extract", str(path))
    assert code == 3
    assert "bad.csv:3" in err


def test_compare_empty(capsys, tmp_path):
    path = tmp_path / "empty.json"
    path.write_text(json.dumps({"results": []}))
    code, _, err = run(capsys, "compare", str(path))
    assert code == 2
    assert "nothing to compare" in err
    with pytest.raises(ConfigurationError, match="missing"):
        compare_rows({"results": [{"device": "schottky-fig1", "temperature_K": 298.15,
                                   "metrics": {"v_on": 1.0}}]})


def _fake_metrics(v_on_s, v_on_h, leak_s, leak_h, ratio_s):
    results = []
    for k, t in enumerate((298.15, 683.15)):
        results.append({"device": "schottky-fig1", "temperature_K": t, "metrics": {
            "v_on": v_on_s[k], "leakage_at_minus3V": leak_s[k], "rectification_ratio": ratio_s[k],
            "rectification_lower_bound": False, "provenance": {"noise_floor_A_cm2": 1e-8}}})
        results.append({"device": "heterojunction-fig2", "temperature_K": t, "metrics": {
            "v_on": v_on_h[k], "leakage_at_minus3V": leak_h[k], "rectification_ratio": 1e8,
            "rectification_lower_bound": leak_h[k] < 1e-8, "provenance": {"noise_floor_A_cm2": 1e-8}}})
    return {"results": results}


def test_compare_rows_pass_and_fail():
    good = compare_rows(_fake_metrics((1.0, 0.4), (1.3, 0.8), (1e-12, 1e-4), (1e-13, 1e-5), (1e9, 1e4)))
    rows = {r[0]: r for r in good}
    assert rows["HJ V_bi - Schottky V_bi >= 0.4 V (measured reference)"][3] == "PASS"
    assert all(r[3] == "PASS" for r in good if r[4])
    leak = next(r for r in good if r[0].startswith("HJ reverse"))
    assert "≥" in leak[1]
    bad = compare_rows(_fake_metrics((1.0, 0.7), (1.1, 0.75), (1e-12, 1e-4), (1e-11, 1e-5), (1e6, 1e5)))
    failed = {r[0] for r in bad if r[4] and r[3] == "FAIL"}
    assert "Schottky V_on in [0.3, 0.6] V @ 683 K" in failed
    assert "HJ reverse J(-3 V) below Schottky at every T" in failed


@pytest.fixture(scope="module")
def full_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("full")
    code = main(["simulate-iv", "--with-cv", "--temperatures", "25", "100", "200", "300", "410",
                 "--output-dir", str(out)])
    assert code == 0
    return out


def test_full_run_trends_and_compare(full_run, capsys):
    payload = json.loads((full_run / "simulate-iv_metrics.json").read_text())
    by = {(r["device"], r["temperature_K"]): r["metrics"] for r in payload["results"]}
    for t in (298.15, 373.15, 473.15, 573.15, 683.15):
        assert by[("heterojunction-fig2", t)]["v_on"] > by[("schottky-fig1", t)]["v_on"]
    code, out, _ = run(capsys, "compare", str(full_run / "simulate-iv_metrics.json"))
    assert "HJ V_bi - Schottky V_bi >= 0.4 V (measured reference) | 0.6 V | >= 0.4 V | PASS" in out
    assert "≥" in out
    assert code == 0


def test_headers_embed_resolved_config(full_run):
    text = (full_run / "schottky-fig1_iv_298.15K.csv").read_text()
    header = [ln for ln in text.splitlines() if ln.startswith("#")]
    joined = "\n".join(header)
    for key in ("temperature_K: 298.15", "compliance:", "bias_step_min", "electron_affinity",
                "interface_capture_cross_section", "min_spacing"):
        assert key in joined


def test_deterministic_outputs(capsys, tmp_path, monkeypatch):
    outputs = []
    for k, jobs in enumerate(("1", "2")):
        d = tmp_path / f"run{k}"
        monkeypatch.setenv("OXDIODE_OUTPUT_DIR", str(d))
        code, _, _ = run(capsys, "simulate-iv", "--temperatures", "25", "410", "--v-from", "-1",
                         "--v-to", "1", "--step", "0.1", "--jobs", jobs, "--format", "csv",
                         "--format", "json", "--format", "dat")
        assert code == 0
        outputs.append({p.name: p.read_bytes() for p in sorted(d.iterdir())})
    assert outputs[0].keys() == outputs[1].keys()
    assert len(outputs[0]) == 9
    for name in outputs[0]:
        assert outputs[0][name] == outputs[1][name], name
