import math

import pytest

from oxdiode.config import RunConfig, apply_override, config_from_dict, load_config
from oxdiode.errors import ConfigurationError


def test_defaults():
    cfg = RunConfig()
    assert cfg.temperatures_k == (298.15, 683.15)
    assert [d.name for d in cfg.build_devices()] == ["schottky-fig1", "heterojunction-fig2"]
    assert cfg.physics.tat and cfg.physics.interface_trap_density == 1e12
    text = cfg.to_yaml()
    assert "interface_trap_density" in text and "bias_step_initial" in text


def test_yaml_round_trip(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text(
        "devices:\n"
        "  - preset: schottky-fig1\n"
        "    diameter_um: 100\n"
        "  - name: slab\n"
        "    layers:\n"
        "      - {material: Ga2O3, thickness_nm: 500, donor_density: 1e17}\n"
        "temperatures: [300, 400]\n"
        "temperature_unit: K\n"
        "iv: {v_from: -1, v_to: 2, step: 0.1}\n"
        "compliance: {density_A_cm2: 10}\n"
        "physics: {tat: false}\n"
        "mesh: {min_spacing_nm: 0.25}\n"
        "materials: {Ga2O3: {electron_mobility: 150}}\n")
    cfg = load_config(path)
    dev, slab = cfg.build_devices()
    assert dev.area == pytest.approx(math.pi * (50e-4) ** 2)
    assert slab.name == "slab" and slab.layers[0].thickness == pytest.approx(500e-7)
    assert slab.layers[0].material.electron_mobility == 150.0
    assert cfg.temperatures_k == (300.0, 400.0)
    assert cfg.compliance.density == 10.0 and cfg.compliance.current is None
    assert cfg.mesh.min_spacing == pytest.approx(0.25e-7)
    assert not cfg.physics.tat
    again = config_from_dict(cfg.to_dict())
    assert again == cfg


@pytest.mark.parametrize("data,match", [
    ({"temperatures": [600]}, "outside"),
    ({"bogus": 1}, "unknown config keys"),
    ({"physics": {"warp": True}}, "unknown keys"),
    ({"devices": ["pin"]}, "unknown device preset"),
    ({"devices": [{"layers": [{"material": "GaN", "thickness_nm": 10}]}]}, "GaN"),
    ({"tasks": ["plot"]}, "unknown task"),
    ({"formats": ["xlsx"]}, "unknown output format"),
    ({"iv": {"v_from": 0, "v_to": 1, "step": 0}}, "step"),
])
def test_validation(data, match):
    with pytest.raises(ConfigurationError, match=match):
        config_from_dict(data)


def test_load_errors(tmp_path):
    with pytest.raises(ConfigurationError, match="cannot read"):
        load_config(tmp_path / "missing.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("devices: [unclosed\n")
    with pytest.raises(ConfigurationError, match="invalid YAML"):
        load_config(bad)
    listy = tmp_path / "list.yaml"
    listy.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigurationError, match="mapping"):
        load_config(listy)


def test_override():
    data = apply_override({}, "physics.interface_trap_density=1e13")
    data = apply_override(data, "temperatures=[25, 100]")
    cfg = config_from_dict(data)
    assert cfg.physics.interface_trap_density == 1e13
    assert cfg.temperatures_k == (298.15, 373.15)
    assert apply_override({}, "a=-2.5E-3") == {"a": -2.5e-3}
    assert apply_override({}, "a=12") == {"a": 12}
    with pytest.raises(ConfigurationError):
        apply_override({}, "no-equals-sign")


def test_output_dir_environment(monkeypatch, tmp_path):
    monkeypatch.setenv("OXDIODE_OUTPUT_DIR", str(tmp_path))
    assert RunConfig().resolved_output_dir == tmp_path
    assert RunConfig(output_dir="x").resolved_output_dir.name == "x"
