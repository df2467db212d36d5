import math

import numpy as np
import pytest

from oxdiode.constants import K_B
from oxdiode.device import NM, ContactSpec, DeviceStructure, Layer, MeshConfig, build_mesh
from oxdiode.errors import ConvergenceError, DomainError
from oxdiode.materials import GA2O3, effective_dos, richardson_constant
from oxdiode.solver.core import DeviceSolver, SolverConfig, solve_bias, solve_equilibrium
from oxdiode.solver.sweep import NO_COMPLIANCE, Compliance, iv_sweep

from conftest import TE_ONLY

PHI_B = 1.432


def js_te(temperature, a_star=None):
    a = richardson_constant(0.28) if a_star is None else a_star
    return a * temperature**2 * math.exp(-PHI_B / (K_B * temperature))


def test_uniform_slab_is_flat():
    dev = DeviceStructure((Layer(GA2O3, 500 * NM, donor_density=1e17),), ContactSpec(), ContactSpec(), 1e-4)
    st = solve_equilibrium(dev, 300.0)
    assert np.ptp(st.psi) < 1e-12
    assert st.n == pytest.approx(np.full_like(st.n, 1e17), rel=1e-9)
    assert st.current_density == 0.0


def test_schottky_equilibrium_barrier(schottky_solver):
    s = schottky_solver
    st = s.equilibrium()
    band = s.band_diagram(st)
    assert band["Ec_eV"][0] == pytest.approx(PHI_B, abs=2e-3)
    vbi = band["Ec_eV"][0] - band["Ec_eV"][-1]
    expected = PHI_B - K_B * 300.0 * math.log(effective_dos(0.28, 300.0) / 4e18)
    assert vbi == pytest.approx(expected, abs=2e-3)
    assert vbi == pytest.approx(1.434, abs=2e-3)
    assert np.all(band["Efn_eV"] == 0.0)


def test_heterojunction_spike(hj_solver):
    st = hj_solver.equilibrium()
    band = hj_solver.band_diagram(st)
    x, ec, ev = band["x_nm"], band["Ec_eV"], band["Ev_eV"]
    k = np.flatnonzero(np.isclose(x, 200.0))
    assert len(k) == 2  # doubled interface node
    assert ec[k[0]] - ec[k[1]] == pytest.approx(2.168, abs=1e-9)
    assert ev[k[0]] - ev[k[1]] == pytest.approx(3.588, abs=1e-9)
    assert ec.max() > PHI_B


def test_equilibrium_detailed_balance(schottky_solver, hj_solver):
    for s in (schottky_solver, hj_solver):
        st = s.equilibrium()
        assert st.n * st.p / np.exp(s.disc.ln_ni2) == pytest.approx(np.ones(s.disc.n_sites), rel=1e-6)


def test_zero_bias_matches_equilibrium(hj_solver):
    eq = hj_solver.equilibrium()
    st = hj_solver.solve_internal(0.0, eq)
    assert st.psi == pytest.approx(eq.psi, abs=1e-9)
    assert st.current_density == pytest.approx(0.0, abs=1e-25)
    assert hj_solver.solve(0.0, eq) is eq


@pytest.fixture(scope="module")
def te_solver(schottky):
    return DeviceSolver(schottky, 300.0, TE_ONLY)


@pytest.mark.parametrize("bias", [0.2, 0.3, 0.4, 0.5, 0.6])
def test_thermionic_forward(te_solver, bias):
    st = te_solver.solve(bias, te_solver.solve(bias / 2))
    vt = K_B * 300.0
    expected = js_te(300.0) * math.expm1(st.internal_bias / vt)
    assert st.current_density == pytest.approx(expected, rel=0.05)


def test_thermionic_reverse(te_solver):
    st = te_solver.equilibrium()
    for v in (-1.0, -2.0, -3.0):
        st = te_solver.solve(v, st)
    assert st.current_density == pytest.approx(-js_te(300.0), rel=0.10)


CONSERVATION_CASES = [
    ("schottky-fig1", 683.15, 0.5),
    ("schottky-fig1", 683.15, 0.8),
    ("heterojunction-fig2", 300.0, 1.6),
    ("heterojunction-fig2", 683.15, 1.2),
]


@pytest.mark.parametrize("name,temperature,bias", CONSERVATION_CASES)
def test_current_conservation(name, temperature, bias):
    from oxdiode import preset
    s = DeviceSolver(preset(name), temperature)
    st = s.solve(bias, s.solve(bias / 2))
    prof = s.current_profile(st)
    assert np.max(np.abs(prof - st.current_density)) <= 1e-6 * abs(st.current_density)


@pytest.mark.parametrize("name,bias", [("schottky-fig1", 0.8), ("heterojunction-fig2", 1.6)])
def test_mesh_halving(name, bias):
    from oxdiode import preset
    dev = preset(name)
    out = []
    for cfg in (MeshConfig(), MeshConfig(min_spacing=0.25 * NM, max_spacing=10 * NM, growth=1.025)):
        s = DeviceSolver(dev, 300.0, mesh=build_mesh(dev, cfg))
        out.append(s.solve(bias, s.solve(bias / 2)).current_density)
    assert out[1] == pytest.approx(out[0], rel=0.01)


def test_series_resistance_drop(schottky):
    s = DeviceSolver(schottky, 300.0)
    st = s.solve(1.2, s.solve(0.9))
    rs = s.series_resistance * schottky.area
    assert st.applied_bias == 1.2
    assert st.internal_bias == pytest.approx(1.2 - st.current_density * rs, abs=1e-7)
    free = DeviceSolver(schottky, 300.0, config=SolverConfig(series_resistance=0.0))
    assert free.solve(1.2, free.solve(0.9)).current_density > st.current_density


def test_convergence_error_carries_diagnostics(schottky):
    s = DeviceSolver(schottky, 300.0, config=SolverConfig(max_gummel_iterations=1))
    with pytest.raises(ConvergenceError) as info:
        s.solve_internal(0.5, s.equilibrium())
    assert info.value.bias == 0.5
    assert len(info.value.residual_history) == 1


def test_bias_out_of_range(schottky):
    with pytest.raises(DomainError):
        solve_bias(schottky, 300.0, 20.0)


def test_sweep_single_point(schottky):
    iv = iv_sweep(schottky, 300.0, 0.0, 0.0)
    assert list(iv.bias) == [0.0] and list(iv.current_density) == [0.0]
    assert not iv.partial


def test_sweep_compliance_clamps(schottky):
    iv = iv_sweep(schottky, 300.0, -1.0, 3.0, step=0.05)
    limit = 1e-3 / schottky.area
    assert iv.compliance_hit[-1]
    assert iv.compliance_hit.sum() == 1
    assert iv.current_density[-1] == pytest.approx(limit)
    assert iv.bias[-1] < 3.0
    assert np.all(np.abs(iv.current_density[:-1]) < limit)
    dens = iv_sweep(schottky, 300.0, 0.0, 3.0, step=0.05, compliance=Compliance(current=None, density=0.5))
    assert dens.current_density[-1] == 0.5
    free = iv_sweep(schottky, 300.0, 0.0, 1.2, step=0.1, compliance=NO_COMPLIANCE)
    assert not free.compliance_hit.any() and free.bias[-1] == pytest.approx(1.2)


def test_sweep_marks_partial_on_failure(schottky):
    cfg = SolverConfig(max_gummel_iterations=1, bias_step_initial=0.05, bias_step_min=0.02)
    iv = iv_sweep(schottky, 300.0, 0.0, 0.5, config=cfg)
    assert iv.partial
    bad = ~iv.converged
    assert bad.any() and np.all(np.isnan(iv.current_density[bad]))


def test_temperature_dependence_of_forward_current(schottky):
    # thermionic current at fixed bias rises steeply with temperature
    j = [solve_bias(schottky, t, 0.5, TE_ONLY).current_density for t in (300.0, 400.0, 500.0)]
    assert j[0] < j[1] < j[2]
