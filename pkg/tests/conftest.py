import os
from importlib import resources

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from dpsim.assembly import Model, State
from dpsim.grid import ContinuumProps, GridDims, build_grid
from dpsim.props import PvtOil, PvtWater, RockCompressibility, corey_table
from dpsim.wells import Perforation, WellSpec

settings.register_profile("dpsim", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "dpsim"))

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


def deck_path(name):
    return str(resources.files("dpsim") / "decks" / name)


def deck_text(name):
    return (resources.files("dpsim") / "decks" / name).read_text()


EX1_OIL = PvtOil(15.0, 1.036, 1.313e-5, 40.0, 58.0)
EX1_WATER = PvtWater(15.0, 1.0, 3e-6, 1.0, 62.4)


def small_model(nx=3, ny=3, nz=1, wells=True, seed=0, pc_max=0.0, heterogeneous=True, **grid_kw):
    """Example-1-like dual-porosity model on a small grid, optionally with random matrix permeability."""
    rng = np.random.default_rng(seed)
    dims = GridDims(nx, ny, nz, 102.04, 102.04, 50.0, 2000.0)
    n = dims.n_cells
    kx = rng.uniform(50, 150, n) if heterogeneous else 100.0
    mat = ContinuumProps(kx, kx, 10.0, RockCompressibility(0.1392, 3e-6, 15.0))
    fr = ContinuumProps(395.85, 300.0, 200.0, RockCompressibility(0.039585, 3e-6, 15.0))
    grid = build_grid(dims, mat, fr, **grid_kw)
    w = []
    if wells:
        w = [WellSpec("INJ", "injector", [Perforation(n // 2, well_index=200.0)], 500.0, 5e4),
             WellSpec("PROD", "producer", [Perforation(0, k_h="AUTO"), Perforation(n - 1, k_h="AUTO")],
                      300.0, 15.0)]
    return Model(grid, EX1_OIL, EX1_WATER, corey_table(0.08, 0.2, pc_max=pc_max), corey_table(0.01, 0.0), w)


def random_state(model, rng, block_size=4):
    n = model.n_cells
    cols = [rng.uniform(1900, 2100, n), rng.uniform(0.05, 0.6, n)]
    if block_size == 4:
        cols += [rng.uniform(1900, 2100, n), rng.uniform(0.1, 0.6, n)]
    p_bh = np.array([2300.0 if w.is_injector else 1700.0 for w in model.wells])
    return State(np.column_stack(cols), p_bh)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
