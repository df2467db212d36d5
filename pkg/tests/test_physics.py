import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oxdiode.constants import K_B
from oxdiode.errors import ConfigurationError
from oxdiode.materials import effective_dos
from oxdiode.solver.physics import (PhysicsFlags, characteristic_tat_field, hetero_interface_flux,
                                    image_force_lowering, schottky_boundary_flux, srh_rate,
                                    tat_enhancement)

# Hurkx factor 1 + int_0^{dE/kT} exp(u - K u^1.5) du, evaluated with mpmath.quad at
# 40 digits from CODATA 2018 constants: (field V/cm, T K, m*, dE eV or None) -> Gamma.
GAMMA_ORACLE = [
    ((1e6, 300.0, 0.28, None), 11090.713633276701),
    ((2e6, 300.0, 0.28, None), 7913074933947.4473),
    ((1e5, 300.0, 0.28, None), 2.2675444369804515),
    ((1e6, 683.15, 0.28, None), 7.9400916493503909),
    ((3e6, 300.0, 0.8, 1.0), 362613763.45504589),
    ((1e4, 300.0, 0.28, None), 1.1659293236497833),
    ((5e6, 300.0, 0.28, 2.5), 6.9032135612043842e29),
]

# F = v_h n_h - v_l n_l exp(-dE/kT) with v_h = sqrt(kT / (2 pi m_h)) and
# v_l = v_h (m_h / m_l)^1.5 for n_l = 1e15 (Ga2O3), n_h = 1e10 (NiO), dE = 0.2 eV, 300 K.
HETERO_FLUX_ORACLE = -8.8198635476494792e17


def test_srh_equilibrium_zero():
    ni = 1e10
    for n in (1e5, 1e10, 1e17):
        assert srh_rate(n, ni * ni / n, ni, 1e-9, 1e-9) == pytest.approx(0.0, abs=1e-6)


def test_srh_minority_limited():
    r = srh_rate(1e18, 1e10, 0.0, 1e-9, 1e-9)
    assert r == pytest.approx(1e19, rel=1e-7)


@given(st.floats(-0.5, 0.5))
def test_srh_detailed_balance_any_trap_level(et):
    ni = 6.5e-24
    p = ni * ni / 1e18
    scale = p / 1e-9  # minority capture rate
    assert abs(srh_rate(1e18, p, ni, 1e-9, 2e-9, et)) <= 1e-12 * scale


@pytest.mark.parametrize("args,expected", GAMMA_ORACLE)
def test_tat_golden(args, expected):
    assert tat_enhancement(*args) == pytest.approx(expected, rel=1e-6)


def test_tat_zero_field_and_vector():
    assert tat_enhancement(0.0, 300.0, 0.28) == 1.0
    out = tat_enhancement(np.array([0.0, 1e6]), 300.0, 0.28)
    assert out[0] == 1.0 and out[1] == pytest.approx(GAMMA_ORACLE[0][1], rel=1e-6)


def test_characteristic_field_scaling():
    f300 = characteristic_tat_field(300.0, 0.28)
    assert characteristic_tat_field(600.0, 0.28) == pytest.approx(f300 * 2**1.5, rel=1e-12)
    assert characteristic_tat_field(300.0, 1.12) == pytest.approx(f300 * 2, rel=1e-12)


@settings(deadline=None)
@given(f1=st.floats(1e3, 4e6), f2=st.floats(1e3, 4e6))
def test_tat_monotone_in_field(f1, f2):
    lo, hi = sorted((f1, f2))
    if hi > lo * (1 + 1e-6):
        assert tat_enhancement(hi, 300.0, 0.28) > tat_enhancement(lo, 300.0, 0.28)


@settings(deadline=None)
@given(t1=st.floats(250.0, 800.0), t2=st.floats(250.0, 800.0), f=st.floats(1e4, 3e6))
def test_tat_decreasing_in_temperature(t1, t2, f):
    lo, hi = sorted((t1, t2))
    if hi > lo + 1e-3:
        assert tat_enhancement(f, hi, 0.28) < tat_enhancement(f, lo, 0.28)


def test_tat_energy_range_caps_integral():
    full = tat_enhancement(3e6, 300.0, 0.28)
    capped = tat_enhancement(3e6, 300.0, 0.28, energy_range=0.5)
    assert 1.0 < capped < full


def test_schottky_boundary_equilibrium_density():
    bc = schottky_boundary_flux(1.432, 300.0, 0.28)
    nc = effective_dos(0.28, 300.0)
    assert bc.equilibrium_density == pytest.approx(nc * math.exp(-1.432 / (K_B * 300.0)), rel=1e-12)
    assert bc.equilibrium_density == pytest.approx(3.3e-6, rel=0.05)
    assert bc.current_density(bc.equilibrium_density) == 0.0
    assert bc.barrier_lowering == 0.0 and bc.tunneling_factor == 1.0


def test_schottky_boundary_options():
    flags = PhysicsFlags(barrier_lowering=True, schottky_tunneling=True)
    plain = schottky_boundary_flux(1.432, 300.0, 0.28)
    bc = schottky_boundary_flux(1.432, 300.0, 0.28, flags, surface_field=1e6, relative_permittivity=10.0)
    dphi = image_force_lowering(1e6, 10.0)
    assert bc.barrier_lowering == pytest.approx(dphi)
    assert 0.05 < dphi < 0.15
    assert bc.velocity > plain.velocity * math.exp(dphi / (K_B * 300.0))
    # equilibrium density is untouched, so zero bias still carries no current
    assert bc.equilibrium_density == plain.equilibrium_density
    with pytest.raises(ConfigurationError):
        schottky_boundary_flux(0.0, 300.0, 0.28)


def test_hetero_flux_golden():
    f = hetero_interface_flux(1e15, 1e10, 0.2, 300.0, mass_low=0.28, mass_high=0.121)
    assert f == pytest.approx(HETERO_FLUX_ORACLE, rel=1e-9)


def test_hetero_flux_degenerate_interface():
    assert hetero_interface_flux(1e12, 1e12, 0.0, 300.0, 0.28, 0.28) == 0.0
    assert hetero_interface_flux(1e12, 2e12, 0.0, 300.0, 0.28, 0.28) > 0.0


@given(de=st.floats(0.0, 3.0), n_low=st.floats(1.0, 1e19), t=st.floats(250.0, 800.0))
def test_hetero_flux_detailed_balance(de, n_low, t):
    ml, mh = 0.28, 0.121
    kt = K_B * t
    n_high = n_low * effective_dos(mh, t) / effective_dos(ml, t) * math.exp(-de / kt)
    f = hetero_interface_flux(n_low, n_high, de, t, ml, mh)
    scale = hetero_interface_flux(0.0, n_high, de, t, ml, mh)
    assert abs(f) <= 1e-12 * abs(scale) + 1e-300


def test_physics_flag_validation():
    with pytest.raises(ConfigurationError):
        PhysicsFlags(interface_trap_density=-1.0)
    with pytest.raises(ConfigurationError):
        PhysicsFlags(tat_energy_range=0.0)
