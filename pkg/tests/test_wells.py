import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dpsim.grid import ContinuumProps, GridDims, build_grid
from dpsim.props import RockCompressibility
from dpsim.wells import (BHP, RATE, Perforation, WellGeometryError, WellSpec, constraint_violation,
                         effective_radius_circle, effective_radius_peaceman, perforation_pressure, perforation_rate,
                         resolve_well_index, well_equation, well_index)


def test_circle_radius():
    assert effective_radius_circle(1.0, math.pi, 1.0) == 1.0
    r = effective_radius_circle(1.0, 102.04 * 102.04, 1.0)
    assert r == pytest.approx(102.04 / math.sqrt(math.pi), rel=1e-14)
    assert round(r, 2) == 57.57


def test_peaceman_isotropic():
    r = effective_radius_peaceman((102.04, 102.04, 100.0), (100.0, 100.0, 10.0))
    assert r == pytest.approx(0.28 * math.sqrt(2) * 102.04 / 2, rel=1e-12)
    assert round(r, 2) == 20.20
    for D in (1.0, 37.5, 500.0):
        r = effective_radius_peaceman((D, D, 1.0), (5.0, 5.0, 5.0))
        assert abs(r - 0.28 * math.sqrt(2) / 2 * D) <= 1e-12 * D


def test_peaceman_zero_perm():
    with pytest.raises(WellGeometryError, match="anisotropy ratio undefined"):
        effective_radius_peaceman((10.0, 10.0, 10.0), (0.0, 10.0, 10.0))


def test_well_index_unit_log():
    assert well_index(73.0, 1.0, math.e * 0.25, 0.25) == pytest.approx(2 * math.pi * 73.0, rel=1e-15)
    wi = well_index(100.0, 1.0, 20.20, 0.25)
    assert wi == pytest.approx(2 * math.pi * 100 / math.log(80.8), rel=1e-14)
    assert wi == pytest.approx(143.0, abs=0.1)


def test_well_index_nonphysical():
    with pytest.raises(WellGeometryError, match="non-physical well geometry"):
        well_index(100.0, 1.0, 0.2, 0.25)
    with pytest.raises(WellGeometryError, match="non-physical well geometry"):
        well_index(100.0, 1.0, 10.0, 0.25, skin=-10.0)


def test_well_index_override_and_auto():
    rock = RockCompressibility(0.1, 0.0, 15.0)
    dims = GridDims(2, 2, 1, 102.04, 102.04, 100.0)
    g = build_grid(dims, ContinuumProps(100.0, 100.0, 10.0, rock), ContinuumProps(100.0, 100.0, 50.0, rock))
    assert resolve_well_index(Perforation(0, well_index=200.0, r_w=-1.0), g) == 200.0
    auto = resolve_well_index(Perforation(0, k_h="AUTO", r_w=0.25), g)
    r_e = 0.28 * math.sqrt(2) * 102.04 / 2
    assert auto == pytest.approx(2 * math.pi * 100.0 * 100.0 / math.log(r_e / 0.25), rel=1e-12)
    circle = resolve_well_index(Perforation(0, k_h=500.0, r_w=0.25, radius_model="circle"), g)
    assert circle == pytest.approx(2 * math.pi * 500.0 / math.log(102.04 / math.sqrt(math.pi) / 0.25))


def test_perforation_rate_example():
    q, dq_dp, dq_ds, dq_dpb = perforation_rate(200.0, 1100.0, 1000.0, (1.0, 0.0, 0.0))
    assert -q == pytest.approx(0.001127 * 200 * 100 * 1.0, rel=1e-14)
    assert dq_dpb == pytest.approx(0.001127 * 200)
    q, *_ = perforation_rate(200.0, 1500.0, 1500.0, (0.7, 0.1, 0.2))
    assert q == 0.0


def test_injector_mobility_used_for_inflow():
    q, _, dq_ds, _ = perforation_rate(np.array([10.0, 10.0]), np.array([100.0, 300.0]), 200.0,
                                      (np.zeros(2), np.zeros(2), np.ones(2)), inj_mob=(5.0, 0.0, 0.0))
    assert q[0] == pytest.approx(0.001127 * 10 * 5.0 * 100.0)
    assert dq_ds[0] == 0.0
    assert q[1] == 0.0  # outflow uses the (zero) cell mobility


def test_hydrostatic_correction():
    assert perforation_pressure(1000.0, 2000.0, 2000.0, 55.0) == 1000.0
    p = perforation_pressure(1000.0, 2000.0, 2100.0, 62.4)
    assert p - 1000.0 == pytest.approx(62.4 / 144 * 100)
    assert round(p - 1000.0, 2) == 43.33


def test_well_equation_and_switching():
    prod = WellSpec("P", "producer", [Perforation(0, well_index=1.0)], 300.0, 15.0)
    inj = WellSpec("I", "injector", [Perforation(0, well_index=1.0)], 500.0, 5e4)
    assert well_equation(prod, RATE, 100.0, -300.0, -5.0)[0] == 0.0
    assert well_equation(inj, RATE, 100.0, 0.0, 500.0)[0] == 0.0
    assert well_equation(prod, BHP, 15.0, -1.0, 0.0)[0] == 0.0
    assert constraint_violation(prod, RATE, 10.0, -300.0, 0.0) == BHP
    assert constraint_violation(prod, RATE, 20.0, -300.0, 0.0) is None
    assert constraint_violation(prod, BHP, 15.0, -350.0, 0.0) == RATE
    assert constraint_violation(inj, RATE, 6e4, 0.0, 500.0) == BHP
    assert constraint_violation(inj, BHP, 5e4, 0.0, 400.0) is None


def test_well_spec_validation():
    with pytest.raises(ValueError):
        WellSpec("X", "observer", [Perforation(0, well_index=1.0)], 1.0, 1.0)
    with pytest.raises(ValueError):
        WellSpec("X", "producer", [], 1.0, 1.0)
    with pytest.raises(WellGeometryError):
        Perforation(0, k_h=10.0, r_w=0.0)


@given(st.floats(1.0, 1000.0), st.floats(1.0, 1000.0), st.floats(0.01, 100.0))
def test_peaceman_symmetric_in_axes(dx, dy, ratio):
    a = effective_radius_peaceman((dx, dy, 1.0), (1.0, ratio, 1.0))
    b = effective_radius_peaceman((dy, dx, 1.0), (ratio, 1.0, 1.0))
    assert a == pytest.approx(b, rel=1e-12)
    assert a > 0


@given(st.floats(-500, 500), st.floats(0.0, 10.0))
def test_perforation_flow_direction(dp, lam):
    q, *_ = perforation_rate(100.0, 1000.0, 1000.0 + dp, (lam, 0.0, 0.0))
    assert q * dp >= 0
