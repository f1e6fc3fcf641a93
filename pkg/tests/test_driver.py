import json
from pathlib import Path

import numpy as np
import pytest
from conftest import deck_path, deck_text

from dpsim.driver import (DeckError, OutputError, Simulation, TimestepController, TimestepUnderflow,
                          check_output_dir, initialize, parse_deck, parse_deck_text, read_wells_csv, run)
from dpsim.driver.deck import tokenize
from dpsim.driver.output import csv_header, write_outputs, write_vtk

HERE = Path(__file__).parent
TINY = str(HERE / "data" / "tiny.deck")
GOLDEN = HERE / "golden"


# -- deck ------------------------------------------------------------------

def test_example1_deck_matches_golden():
    g = json.loads((GOLDEN / "ex1_deck.json").read_text())
    d = parse_deck(deck_path("ex1.deck"))
    assert list(d.dims.shape) == g["dims"]
    assert np.all(d.dims.dx == g["dx"]) and np.all(d.dims.dy == g["dy"]) and np.all(d.dims.dz == g["dz"])
    assert d.dims.top_is_center and d.dims.top_depth == g["layer1_center_depth"]
    for name, cont in (("matrix", d.matrix), ("fracture", d.fracture)):
        ref = g[name]
        assert [float(np.mean(k)) for k in (cont.perm_x, cont.perm_y, cont.perm_z)] == ref["perm"]
        assert float(np.mean(cont.rock.phi_ref)) == ref["poro"]
        assert cont.rock.c_r == ref["c_r"] and cont.rock.p_ref == ref["p_ref"]
    o, w = g["oil"], g["water"]
    assert (d.oil.p_ref, d.oil.B_ref, d.oil.c_o, d.oil.mu_o, d.oil.rho_sc) == (
        o["p_ref"], o["B_ref"], o["c"], o["mu"], o["rho_sc"])
    assert (d.water.p_ref, d.water.B_ref, d.water.c_w, d.water.mu_w, d.water.rho_sc) == (
        w["p_ref"], w["B_ref"], w["c"], w["mu"], w["rho_sc"])
    assert {k: d.init[k] for k in ("pf", "pm", "swf", "swm")} == g["init"]
    assert d.t_end == g["t_end"]
    nx, ny, _ = g["dims"]
    assert len(d.wells) == len(g["wells"])
    for spec, ref in zip(d.wells, g["wells"]):
        i, j, k = ref["ijk"]
        assert spec.name == ref["name"] and spec.kind == ref["kind"]
        assert spec.perforations[0].cell == (i - 1) + nx * ((j - 1) + ny * (k - 1))
        assert spec.max_rate == ref["max_rate"] and spec.bhp_limit == ref["bhp_limit"]
        assert spec.perforations[0].well_index == ref["wi"]


def test_example2_deck():
    d = parse_deck(deck_path("ex2.deck"))
    assert d.dims.shape == (10, 10, 3)
    assert d.init["pm"] == 800.0 and d.init["pf"] == 500.0
    assert d.wells[0].perforations[0].cell == 4 + 10 * 4


@pytest.mark.parametrize("name", ["ex1.deck", "ex2.deck"])
def test_initial_state_is_constant(name):
    d = parse_deck(deck_path(name))
    st = initialize(d)
    for col, key in enumerate(("pf", "swf", "pm", "swm")):
        assert np.all(st.cells[:, col] == d.init[key])


def test_empty_deck():
    with pytest.raises(DeckError, match="missing GRID section"):
        parse_deck_text("")
    with pytest.raises(DeckError, match="missing GRID section"):
        parse_deck_text("-- only a comment\n")


def test_zero_nx_reports_dimens_line():
    text = deck_text("ex1.deck").replace("DIMENS 10 10 1", "DIMENS 0 10 1")
    lineno = next(k for k, s in enumerate(text.splitlines(), 1) if "DIMENS" in s)
    with pytest.raises(DeckError) as exc:
        parse_deck_text(text, "bad.deck")
    assert exc.value.line == lineno
    assert str(exc.value).startswith(f"bad.deck:{lineno}:")


@pytest.mark.parametrize("old,new,msg", [
    ("PORO 0.1392", "PORO 0.1392 0.2", "PORO needs 1 or 100 values"),
    ("PERF INJ   5 1 1", "PERF INJ   11 1 1", "outside 1..10"),
    ("FORCING EW3 GAMMA 0.9 BETA 2.0", "FORCING EW9", "FORCING must be"),
    ("TEND 800", "TEND -1", "TEND must be non-negative"),
    ("VISC 40.0", "VISC abc", "expected a number"),
    ("GRAVITY ON", "GRAVITY MAYBE", "GRAVITY takes ON or OFF"),
    ("MODEL KAZEMI", "MODEL SUGAR", "MODEL must be"),
])
def test_deck_errors_carry_location(old, new, msg):
    text = deck_text("ex1.deck")
    assert old in text
    with pytest.raises(DeckError, match=msg) as exc:
        parse_deck_text(text.replace(old, new, 1))
    assert exc.value.line is not None


def test_repeat_counts_and_comments():
    lines = tokenize("PERMX 3*100 2*5.5 -- trailing\n# whole line\nDX 1e2\n")
    assert [ln.keyword.text for ln in lines] == ["PERMX", "DX"]
    d = parse_deck(TINY)
    np.testing.assert_array_equal(d.matrix.perm_y, np.full(9, 100.0))
    np.testing.assert_array_equal(d.matrix.perm_x, np.arange(80.0, 161.0, 10.0))


def test_schedule_events_and_reports():
    d = parse_deck(TINY)
    assert d.report_times == [25.0, 50.0, 75.0] and d.t_end == 100.0
    (ev,) = d.events
    assert (ev.time, ev.well, ev.key, ev.value) == (50.0, "PROD", "RATE_MAX", 40.0)


def test_non_increasing_schedule_rejected():
    text = Path(TINY).read_text().replace("AT 50 PROD RATE_MAX 40", "AT 50 PROD RATE_MAX 40\n  AT 20 PROD RATE_MAX 30")
    with pytest.raises(DeckError, match="increasing"):
        parse_deck_text(text)


# -- time-step control -----------------------------------------------------

def test_controller_grows_and_lands_on_targets():
    c = TimestepController(1.0, 0.01, 8.0, 2.0, 0.5, 3)
    t, hs = 0.0, []
    while t < 20.0:
        h, hit = c.step(t, 20.0)
        t = 20.0 if hit else t + h
        c.accept()
        hs.append(h)
    assert hs == [1.0, 2.0, 4.0, 8.0, 5.0]


def test_controller_truncated_step_does_not_grow():
    c = TimestepController(4.0, 0.01, 50.0)
    h, hit = c.step(0.0, 1.0)
    assert (h, hit) == (1.0, True)
    c.accept()
    assert c.dt == 4.0


def test_controller_cuts_and_underflows():
    c = TimestepController(1.0, 0.1, 10.0, 2.0, 0.5, 10)
    c.reject()
    assert c.dt == 0.5
    c.reject(0.2)
    assert c.dt == 0.1
    with pytest.raises(TimestepUnderflow):
        c.reject()
    c = TimestepController(1.0, 1e-6, 10.0, 2.0, 0.5, 2)
    c.reject()
    c.reject()
    with pytest.raises(TimestepUnderflow):
        c.reject()


def test_controller_validation():
    with pytest.raises(ValueError):
        TimestepController(0.001, 0.01, 1.0)
    with pytest.raises(ValueError):
        TimestepController(1.0, 0.01, 10.0, cut=1.5)


# -- outputs ---------------------------------------------------------------

def test_header_matches_golden():
    assert ",".join(csv_header(["INJ", "PROD1", "PROD2"])) == (GOLDEN / "ex1_wells_header.csv").read_text().strip()


def test_zero_length_schedule_gives_header_only(tmp_path):
    d = parse_deck_text(Path(TINY).read_text().replace("TEND 100", "TEND 0").replace("REPORT_EVERY 25", "")
                        .replace("AT 50 PROD RATE_MAX 40", ""))
    sim = Simulation(d)
    st0 = sim.state.copy()
    res = sim.run()
    sim.close()
    assert res.rows == [] and res.summary.steps == 0
    np.testing.assert_array_equal(res.state.cells, st0.cells)
    write_outputs(tmp_path, ["INJ", "PROD"], res.rows, res.summary)
    lines = (tmp_path / "wells.csv").read_text().splitlines()
    assert lines == [",".join(csv_header(["INJ", "PROD"]))]


def test_unwritable_output_dir(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OutputError):
        check_output_dir(blocker / "sub")


def test_vtk_snapshot(tmp_path):
    d = parse_deck(TINY)
    sim = Simulation(d)
    write_vtk(tmp_path / "s.vtk", sim.model.grid, sim.state, 0.0)
    text = (tmp_path / "s.vtk").read_text().splitlines()
    sim.close()
    assert text[0] == "# vtk DataFile Version 3.0"
    assert "DIMENSIONS 4 4 2" in text and "CELL_DATA 9" in text
    for name in ("p_f", "s_wf", "p_m", "s_wm"):
        assert f"SCALARS {name} double 1" in text


# -- marching --------------------------------------------------------------

@pytest.fixture(scope="module")
def tiny_run():
    d = parse_deck(TINY)
    return d, run(d)


def test_row_bookkeeping(tiny_run):
    d, res = tiny_run
    rows = res.rows
    assert res.completed and rows[-1].time == d.t_end
    assert [r.step for r in rows] == list(range(1, len(rows) + 1))
    assert sum(r.newton for r in rows) == res.summary.newton_total
    assert sum(r.linear for r in rows) == res.summary.linear_total
    times = np.array([r.time for r in rows])
    np.testing.assert_allclose(np.cumsum([r.dt for r in rows]), times, rtol=1e-12)
    for t in d.report_times:
        assert t in times
    # cumulatives are integrals of the reported rates
    cum = np.cumsum([r.dt * r.wells[1].oil_rate for r in rows])
    np.testing.assert_allclose([r.cum_oil_prod for r in rows], cum, rtol=1e-12)
    assert max(max(r.mb_err_oil, r.mb_err_water) for r in rows) < 1e-6


def test_schedule_event_applied(tiny_run):
    _, res = tiny_run
    for r in res.rows:
        prod = r.wells[1]
        limit = 60.0 if r.time <= 50.0 else 40.0
        assert prod.oil_rate <= limit * (1 + 1e-6)
        if prod.control == "rate":
            assert prod.oil_rate == pytest.approx(limit, rel=1e-6)


def test_run_is_deterministic(tiny_run):
    d, res = tiny_run
    again = run(parse_deck(TINY))
    assert np.array_equal(again.state.cells, res.state.cells)
    assert [(r.newton, r.linear) for r in again.rows] == [(r.newton, r.linear) for r in res.rows]


def test_checkpoint_restart_matches(tmp_path, tiny_run):
    d, straight = tiny_run
    sim = Simulation(d)
    sim.run(stop_at=50.0)
    sim.checkpoint(tmp_path / "ck")
    sim.close()
    resumed = Simulation(parse_deck(TINY)).restore(tmp_path / "ck")
    res = resumed.run()
    resumed.close()
    assert len(res.rows) == len(straight.rows)
    np.testing.assert_allclose(res.state.cells, straight.state.cells, rtol=1e-12)
    for a, b in zip(res.rows, straight.rows):
        assert a.time == b.time
        for wa, wb in zip(a.wells, b.wells):
            assert wa.oil_rate == pytest.approx(wb.oil_rate, rel=1e-10, abs=1e-12)


def test_controls_switch_to_bhp():
    text = Path(TINY).read_text().replace("RATE_MAX 60 BHP_MIN 15", "RATE_MAX 5000 BHP_MIN 1900")
    text = text.replace("AT 50 PROD RATE_MAX 40", "")
    res = run(parse_deck_text(text))
    prod = [r.wells[1] for r in res.rows]
    assert prod[-1].control == "bhp"
    assert prod[-1].bhp == pytest.approx(1900.0)
    assert res.summary.switches >= 1


def test_single_porosity_run():
    res = run(parse_deck(TINY), single_porosity=True)
    assert res.completed and res.state.cells.shape == (9, 2)


def test_read_wells_csv_roundtrip(tmp_path, tiny_run):
    _, res = tiny_run
    write_outputs(tmp_path, ["INJ", "PROD"], res.rows, res.summary)
    cols = read_wells_csv(tmp_path / "wells.csv")
    assert cols["PROD:control"].dtype == object
    np.testing.assert_array_equal(cols["time"], [r.time for r in res.rows])
    np.testing.assert_array_equal(cols["PROD:oil_rate"], [r.wells[1].oil_rate for r in res.rows])
    summary = dict(line.split(" = ") for line in (tmp_path / "summary.txt").read_text().splitlines())
    assert int(summary["steps"]) == res.summary.steps
