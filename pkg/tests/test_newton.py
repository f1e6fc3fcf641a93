import numpy as np
import pytest
from conftest import deck_path, small_model
from hypothesis import given
from hypothesis import strategies as st

from dpsim.assembly import Model, State
from dpsim.driver import build_model, initialize, linear_config, newton_config, parse_deck
from dpsim.grid import ContinuumProps, GridDims, build_grid
from dpsim.linear import LinearConfig
from dpsim.newton import (CONVERGED, FAILED, NewtonConfig, apply_update, damp_update, forcing_term,
                          solve_timestep)
from dpsim.props import PvtOil, PvtWater, RockCompressibility, SatFuncTable
from dpsim.wells import Perforation, WellSpec

CFG = NewtonConfig()


def affine_cell():
    """One dual-porosity cell with constant mobilities, incompressible fluids and rock, and a BHP producer.

    Every residual is affine in the unknowns, so an exact linear solve is an exact Newton step.
    """
    flat = SatFuncTable.from_rows([[0.0, 1.0, 1.0, 0.0], [1.0, 1.0, 1.0, 0.0]])
    grid = build_grid(GridDims(1, 1, 1, 100.0, 100.0, 20.0),
                      ContinuumProps(10.0, 10.0, 10.0, RockCompressibility(0.2, 0.0, 1000.0)),
                      ContinuumProps(500.0, 500.0, 500.0, RockCompressibility(0.05, 0.0, 1000.0)))
    well = WellSpec("P", "producer", [Perforation(0, well_index=50.0)], 1e4, 900.0, control="bhp")
    model = Model(grid, PvtOil(1000.0, 1.0, 0.0, 2.0, 50.0), PvtWater(1000.0, 1.0, 0.0, 1.0, 62.4),
                  flat, flat, [well])
    old = State(np.array([[1000.0, 0.5, 1000.0, 0.4]]), np.array([900.0]))
    guess = State(np.array([[960.0, 0.45, 990.0, 0.41]]), np.array([900.0]))
    return model, old, guess


def test_forcing_examples():
    cfg = NewtonConfig(gamma=1.0, beta=2.0)
    assert forcing_term("ew3", 0.5, 1.0, None, cfg) == pytest.approx(0.25)
    assert forcing_term("ew3", 1.0, 1.0, None, CFG) == pytest.approx(0.9)
    assert forcing_term("ew3", 2.0, 1.0, None, CFG) == 0.9
    assert forcing_term("ew2", 10.0, 100.0, 9.0, CFG) == pytest.approx(0.01)
    assert forcing_term("ew2", 9.0, 100.0, 10.0, CFG) == pytest.approx(0.01)
    assert forcing_term("ew1", 10.0, 100.0, 9.0, CFG, norm_diff=3.0) == pytest.approx(0.03)
    assert forcing_term("ew1", 10.0, 100.0, 9.0, CFG, norm_diff=1e-9) == CFG.eta_min


def test_forcing_first_iteration_and_zero_history():
    for rule in ("ew1", "ew2", "ew3"):
        assert forcing_term(rule, 1.0, None, None, CFG) == 0.1
        assert forcing_term(rule, 1.0, 0.0, 0.0, CFG, norm_diff=0.0) == CFG.eta_min


def test_const_forcing_is_not_clamped():
    cfg = NewtonConfig(forcing="const", constant=1e-8)
    assert forcing_term("const", 1.0, 2.0, 1.0, cfg) == 1e-8
    assert forcing_term("const", 1.0, None, None, cfg) == 1e-8


def test_config_validation():
    with pytest.raises(ValueError):
        NewtonConfig(forcing="ew4")
    with pytest.raises(ValueError):
        NewtonConfig(eta_min=0.5, eta_max=0.1)
    with pytest.raises(ValueError):
        NewtonConfig(beta=2.5)
    with pytest.raises(ValueError):
        NewtonConfig(epsilon=0.0)


@given(st.sampled_from(["ew1", "ew2", "ew3"]), st.floats(0.0, 1e6), st.floats(1e-12, 1e6),
       st.floats(0.0, 1e6), st.floats(0.0, 1e6))
def test_adaptive_forcing_stays_in_bounds(rule, nb, nb_prev, nr_prev, ndiff):
    eta = forcing_term(rule, nb, nb_prev, nr_prev, CFG, ndiff)
    assert CFG.eta_min <= eta <= CFG.eta_max


def test_damping_clips_each_entry():
    y = np.array([800.0, 0.5, -20.0, -0.3, -900.0, 0.01, 10.0, 0.1, 1000.0])
    d = damp_update(y, 2, 4, CFG)
    np.testing.assert_array_equal(d, [500.0, 0.2, -20.0, -0.2, -500.0, 0.01, 10.0, 0.1, 500.0])


@given(st.lists(st.floats(-5.0, 5.0), min_size=4, max_size=4), st.lists(st.floats(0.0, 1.0), min_size=2, max_size=2))
def test_update_keeps_saturations_in_unit_interval(dy, s0):
    state = State(np.array([[1000.0, s0[0], 1000.0, s0[1]]]), np.zeros(0))
    new = apply_update(state, np.array(dy) * [100.0, 1.0, 100.0, 1.0], CFG)
    assert np.all((new.cells[:, 1::2] >= 0.0) & (new.cells[:, 1::2] <= 1.0))
    assert np.all(np.abs(new.cells[:, 0::2] - 1000.0) <= CFG.dp_max)


def test_converged_state_takes_zero_iterations():
    model = small_model(3, 3, 1, wells=False)
    n = model.n_cells
    model.gravity = False
    st0 = State(np.tile([2000.0, 0.2, 2000.0, 0.2], (n, 1)), np.zeros(0))
    x, rep, _ = solve_timestep(model, st0, 5.0)
    assert rep.outcome == CONVERGED and rep.iterations == 0
    np.testing.assert_array_equal(x.cells, st0.cells)


def test_affine_problem_single_iteration():
    model, old, guess = affine_cell()
    x, rep, _ = solve_timestep(model, old, 1.0, NewtonConfig(forcing="const", constant=1e-8), initial=guess)
    assert rep.outcome == CONVERGED and rep.iterations == 1
    np.testing.assert_allclose(x.cells[0], [900.0, 0.5, 900.0, 0.4], rtol=1e-9)


@pytest.fixture(scope="module")
def ex1_first_step():
    deck = parse_deck(deck_path("ex1.deck"))
    model = build_model(deck)
    return deck, model, initialize(deck, model)


@pytest.mark.parametrize("rule", ["ew1", "ew2", "ew3"])
def test_example1_first_step_adaptive_rules(ex1_first_step, rule):
    deck, model, st0 = ex1_first_step
    cfg = newton_config(deck, rule)
    _, rep, _ = solve_timestep(model, st0, deck.solver.dt_init, cfg, linear_config=linear_config(deck))
    assert rep.converged and rep.iterations <= cfg.max_iters
    assert all(cfg.eta_min <= e <= cfg.eta_max for e in rep.etas)
    # each inexact step met its tolerance
    assert all(r <= e * (1 + 1e-12) for r, e in zip(rep.linear_residuals, rep.etas))


def test_example1_first_step_residual_decreases(ex1_first_step):
    deck, model, st0 = ex1_first_step
    _, rep, _ = solve_timestep(model, st0, deck.solver.dt_init, newton_config(deck),
                               linear_config=linear_config(deck))
    norms = rep.residual_norms
    assert all(b < a for a, b in zip(norms[1:], norms[2:]))


def test_linear_failure_reports_failed(ex1_first_step):
    deck, model, st0 = ex1_first_step
    lin = LinearConfig(restart=2, max_iters=1)
    _, rep, _ = solve_timestep(model, st0, 1.0, NewtonConfig(forcing="const", constant=1e-12), linear_config=lin)
    assert rep.outcome == FAILED and "linear solver" in rep.message


def test_on_system_sees_every_linear_system(ex1_first_step):
    deck, model, st0 = ex1_first_step
    seen = []
    _, rep, _ = solve_timestep(model, st0, 1.0, newton_config(deck), linear_config=linear_config(deck),
                               on_system=lambda it, jac, rhs: seen.append(it))
    assert seen == list(range(rep.iterations))
