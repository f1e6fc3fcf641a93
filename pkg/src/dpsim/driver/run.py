"""Time marching: initialization, constraint switching, reports and checkpoints."""
from __future__ import annotations

import copy
import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..assembly import Model, State, assemble, assemble_single_porosity, in_place_mass
from ..grid import build_grid
from ..linear import CprConfig, LinearConfig
from ..newton import NewtonConfig, solve_timestep
from ..parallel import WorkerPool
from ..props import oil_density, water_density
from ..wells import constraint_violation
from .controller import TimestepController, TimestepUnderflow
from .deck import SimDeck

log = logging.getLogger(__name__)


class ConvergenceError(RuntimeError):
    pass


@dataclass
class WellReport:
    name: str
    oil_rate: float  # STB/day, positive = produced for producers, injected for injectors
    water_rate: float  # STB/day, same sign convention
    water_rate_rb: float  # reservoir bbl/day
    bhp: float
    control: str


@dataclass
class ReportRow:
    time: float
    dt: float
    step: int
    newton: int
    linear: int
    wells: list[WellReport]
    cum_oil_prod: float
    cum_water_prod: float
    cum_water_inj: float
    mb_err_oil: float
    mb_err_water: float


@dataclass
class RunSummary:
    steps: int = 0
    newton_total: int = 0
    linear_total: int = 0
    wall_time: float = 0.0
    cuts: int = 0
    switches: int = 0
    final_time: float = 0.0
    newton_per_step: list = field(default_factory=list)
    linear_per_step: list = field(default_factory=list)


@dataclass
class RunResult:
    state: State
    rows: list[ReportRow]
    summary: RunSummary
    completed: bool


def build_model(deck: SimDeck) -> Model:
    grid = build_grid(deck.dims, deck.matrix, deck.fracture, **deck.transfer)
    return Model(grid, deck.oil, deck.water, deck.table_matrix, deck.table_fracture,
                 copy.deepcopy(deck.wells), gravity=deck.gravity)


def _clamp_sat(value, table, what):
    lo, hi = float(table.sw[0]), float(table.sw[-1])
    if not lo <= value <= hi:
        log.warning("initial %s saturation %g outside table range [%g, %g]; clamped", what, value, lo, hi)
        return min(max(value, lo), hi)
    return value


def initialize(deck: SimDeck, model: Model | None = None, single_porosity=False) -> State:
    """Constant initial pressures/saturations per continuum, plus a bottom-hole pressure guess."""
    model = model or build_model(deck)
    n = model.n_cells
    init = deck.init
    swf = _clamp_sat(init["swf"], deck.table_fracture, "fracture")
    swm = _clamp_sat(init["swm"], deck.table_matrix, "matrix")
    if single_porosity:
        cells = np.tile([init["pf"], swf], (n, 1)).astype(float)
    else:
        cells = np.tile([init["pf"], swf, init["pm"], swm], (n, 1)).astype(float)
    if init.get("equil"):
        # hydrostatic oil gradient from the shallowest cell centre; PF/PM hold there
        g = model.grid
        rho = oil_density(np.array([init["pf"], init["pm"]]), model.oil)[0]
        dz = g.depth - g.depth.min()
        cells[:, 0] += rho[0] * model.g * dz
        if not single_porosity:
            cells[:, 2] += rho[1] * model.g * dz
    p_bh = np.empty(model.n_wells)
    for w, spec in enumerate(model.wells):
        p0 = cells[spec.perforations[0].cell, 0]
        if spec.is_injector:
            p_bh[w] = min(p0 + 100.0, spec.bhp_limit)
        else:
            p_bh[w] = max(p0 - 100.0, spec.bhp_limit)
    return State(cells, p_bh)


def newton_config(deck: SimDeck, forcing=None) -> NewtonConfig:
    s = deck.solver
    rule, const = s.forcing, s.forcing_constant
    if forcing:
        rule, _, val = forcing.lower().partition(":")
        if rule == "const":
            const = float(val) if val else const
    return NewtonConfig(epsilon=s.newton_tol, max_iters=s.newton_max_iters, forcing=rule, gamma=s.gamma,
                        beta=s.beta, constant=const, eta_min=s.eta_min, eta_max=s.eta_max,
                        eta_initial=s.eta_initial, dp_max=s.dp_max, ds_max=s.ds_max, mb_tol=s.mb_tol)


def linear_config(deck: SimDeck, single_porosity=False) -> LinearConfig:
    s = deck.solver
    pset = (0,) if single_porosity or s.pressure_set == "fracture" else (0, 2)
    cpr = CprConfig(pressure_set=pset, mode=s.precond, pressure_solver=s.pressure_solver)
    return LinearConfig(restart=s.linear_restart, max_iters=s.linear_max_iters, cpr=cpr)


class Simulation:
    """One run of a deck.  ``run`` may be called with ``stop_at`` and resumed later."""

    def __init__(self, deck: SimDeck, threads=1, forcing=None, single_porosity=None, on_system=None,
                 on_step=None, dump_dir=None):
        self.deck = deck
        self.single = deck.solver.single_porosity if single_porosity is None else single_porosity
        self.model = build_model(deck)
        self.pool = WorkerPool(threads)
        self.newton = newton_config(deck, forcing)
        self.linear = linear_config(deck, self.single)
        self.assemble_fn = assemble_single_porosity if self.single else assemble
        s = deck.solver
        self.controller = TimestepController(s.dt_init, s.dt_min, s.dt_max, s.grow, s.cut, s.max_cuts)
        self.state = initialize(deck, self.model, self.single)
        self.controls = [w.control for w in self.model.wells]
        self.time = 0.0
        self.rows: list[ReportRow] = []
        self.summary = RunSummary()
        self.cum = np.zeros(3)  # oil produced, water produced, water injected (STB)
        self.next_event = 0
        self.on_system = on_system  # (step, newton_iteration, jac, rhs)
        self.on_step = on_step  # (simulation, row)
        self._mass = in_place_mass(self.model, self.state).sum(axis=1)
        self._pending = (0, 0)  # iterations spent on the step in progress, including cut attempts
        self.dump_dir = dump_dir

    # -- schedule -----------------------------------------------------------
    def _stops(self, stop_at=None):
        stops = set(self.deck.report_times)
        stops.update(e.time for e in self.deck.events if e.time > 0)
        stops.add(self.deck.t_end)
        if stop_at is not None:
            stops.add(stop_at)
        return sorted(t for t in stops if t <= self.deck.t_end)

    def _apply_events(self):
        events = self.deck.events
        names = {w.name: (k, w) for k, w in enumerate(self.model.wells)}
        while self.next_event < len(events) and events[self.next_event].time <= self.time:
            ev = events[self.next_event]
            k, spec = names[ev.well]
            if ev.key == "RATE_MAX":
                spec.max_rate = ev.value
                self.controls[k] = "rate"
            elif ev.key in ("BHP_MIN", "BHP_MAX"):
                spec.bhp_limit = ev.value
            else:
                self.controls[k] = ev.value
            log.info("t=%g: %s %s -> %s", self.time, ev.well, ev.key, ev.value)
            self.next_event += 1

    # -- one step -----------------------------------------------------------
    def _switch(self, state, res, controls):
        changed = False
        for w, spec in enumerate(self.model.wells):
            new = constraint_violation(spec, controls[w], state.p_bh[w], res.well_rates[w, 0], res.well_rates[w, 1])
            if new is not None:
                log.info("well %s switches %s -> %s", spec.name, controls[w], new)
                controls[w] = new
                changed = True
        return changed

    def _attempt(self, dt, step_no):
        """Solve one step with constraint switching; returns ((state, result, controls) or None, newton, linear).

        Limits are checked after every Newton update and again on the
        converged state; a step may switch at most ``max_switches`` times.
        """
        controls = list(self.controls)
        guess = None
        newton = linear = switches = 0
        budget = self.deck.solver.max_switches
        hook = None
        if self.on_system is not None:
            def hook(it, jac, rhs):
                self.on_system(step_no, it, jac, rhs)
        while True:
            x, rep, res = solve_timestep(self.model, self.state, dt, self.newton, controls, self.linear,
                                         self.pool, self.assemble_fn, guess, hook,
                                         switch=self._switch, max_switches=budget - switches)
            newton += rep.iterations
            linear += rep.total_linear_iterations
            switches += rep.switches
            controls = list(rep.controls)
            if not rep.converged:
                log.info("step %d dt=%g: Newton %s %s", step_no, dt, rep.outcome, rep.message)
                self.summary.switches += switches
                return None, newton, linear
            if not self._switch(x, res, controls):
                self.summary.switches += switches
                return (x, res, controls), newton, linear
            switches += 1
            if switches > budget:
                log.info("step %d: too many constraint switches", step_no)
                self.summary.switches += switches
                return None, newton, linear
            guess = x

    def _report(self, new: State, res, dt, controls, newton, linear):
        model = self.model
        mass_new = in_place_mass(model, new).sum(axis=1)
        rho_sc = np.array([model.oil.rho_sc, model.water.rho_sc])
        src = (res.well_rates * rho_sc).sum(axis=0)  # net mass into the reservoir per day
        mb = np.abs(mass_new - self._mass - dt * src) / np.maximum(np.abs(mass_new), 1e-300)
        self._mass = mass_new
        pf = model.perfs
        rho_w = water_density(new.p_f[pf["cell"]], model.water)[0] if len(pf["cell"]) else np.zeros(0)
        rb = res.perf_rates[:, 1] / rho_w if len(rho_w) else np.zeros(0)  # reservoir bbl/day
        wells = []
        for w, spec in enumerate(model.wells):
            sign = 1.0 if spec.is_injector else -1.0
            qo, qw = sign * res.well_rates[w]
            q_rb = sign * rb[pf["well"] == w].sum()
            if spec.is_injector:
                self.cum[2] += dt * qw
            else:
                self.cum[0] += dt * qo
                self.cum[1] += dt * qw
            wells.append(WellReport(spec.name, float(qo), float(qw), float(q_rb), float(new.p_bh[w]), controls[w]))
        return ReportRow(self.time, dt, self.summary.steps, newton, linear, wells, float(self.cum[0]),
                         float(self.cum[1]), float(self.cum[2]), float(mb[0]), float(mb[1]))

    # -- marching -----------------------------------------------------------
    def run(self, stop_at=None) -> RunResult:
        t0 = time.perf_counter()
        end = self.deck.t_end if stop_at is None else min(stop_at, self.deck.t_end)
        stops = [t for t in self._stops(stop_at) if t > self.time]
        self._apply_events()
        try:
            for target in stops:
                if target > end:
                    break
                while self.time < target:
                    self._apply_events()
                    h, hits = self.controller.step(self.time, target)
                    step_no = self.summary.steps + 1
                    out, newton, linear = self._attempt(h, step_no)
                    self.summary.newton_total += newton
                    self.summary.linear_total += linear
                    self._pending = (self._pending[0] + newton, self._pending[1] + linear)
                    if out is None:
                        self.summary.cuts += 1
                        self.controller.reject(h)
                        continue
                    new, res, controls = out
                    self.time = target if hits else self.time + h
                    self.controller.accept()
                    self.summary.steps += 1
                    n_it, l_it = self._pending
                    self._pending = (0, 0)
                    self.summary.newton_per_step.append(n_it)
                    self.summary.linear_per_step.append(l_it)
                    row = self._report(new, res, h, controls, n_it, l_it)
                    self.state = new
                    self.controls = controls
                    self.rows.append(row)
                    if self.on_step is not None:
                        self.on_step(self, row)
        except TimestepUnderflow as exc:
            self.summary.wall_time += time.perf_counter() - t0
            self.summary.final_time = self.time
            if self.dump_dir is not None:
                dump = Path(self.dump_dir) / "failure_state.npz"
                np.savez(dump, time=self.time, cells=self.state.cells, p_bh=self.state.p_bh,
                         controls=np.array(self.controls))
                log.error("failing state written to %s", dump)
            raise ConvergenceError(f"t={self.time:g} day: {exc}") from exc
        self._apply_events()
        self.summary.wall_time += time.perf_counter() - t0
        self.summary.final_time = self.time
        return RunResult(self.state, self.rows, self.summary, self.time >= self.deck.t_end)

    def close(self):
        self.pool.close()

    # -- checkpoint ---------------------------------------------------------
    def checkpoint(self, path):
        """Write ``path``.npz (state arrays) and ``path``.json (everything else)."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        np.savez(path.with_suffix(".npz"), cells=self.state.cells, p_bh=self.state.p_bh, cum=self.cum,
                 mass=self._mass)
        meta = {
            "time": self.time,
            "controller": self.controller.state_dict(),
            "controls": self.controls,
            "next_event": self.next_event,
            "wells": [{"max_rate": w.max_rate, "bhp_limit": w.bhp_limit} for w in self.model.wells],
            "summary": asdict(self.summary),
            "pending": list(self._pending),
            "single_porosity": self.single,
            "rows": [asdict(r) for r in self.rows],
        }
        path.with_suffix(".json").write_text(json.dumps(meta))

    def restore(self, path):
        path = Path(path)
        arrs = np.load(path.with_suffix(".npz"))
        meta = json.loads(path.with_suffix(".json").read_text())
        if meta["single_porosity"] != self.single:
            raise ValueError("checkpoint was written with a different porosity model")
        self.state = State(arrs["cells"].copy(), arrs["p_bh"].copy())
        self.cum = arrs["cum"].copy()
        self._mass = arrs["mass"].copy()
        self.time = meta["time"]
        self.controller.load_state(meta["controller"])
        self.controls = list(meta["controls"])
        self.next_event = meta["next_event"]
        for w, d in zip(self.model.wells, meta["wells"]):
            w.max_rate, w.bhp_limit = d["max_rate"], d["bhp_limit"]
        s = meta["summary"]
        self.summary = RunSummary(**s)
        self.summary.wall_time = 0.0
        self._pending = tuple(meta["pending"])
        self.rows = [ReportRow(**{**r, "wells": [WellReport(**w) for w in r["wells"]]}) for r in meta["rows"]]
        return self


def run(deck: SimDeck, threads=1, forcing=None, single_porosity=None, stop_at=None) -> RunResult:
    sim = Simulation(deck, threads, forcing, single_porosity)
    try:
        return sim.run(stop_at)
    finally:
        sim.close()
