"""Fully implicit residual and Jacobian for the dual-porosity oil-water system.

Per cell the unknowns are ordered ``(p_f, s_wf, p_m, s_wm)`` and the equations
``(oil_f, water_f, oil_m, water_m)``; one bottom-hole pressure per well
follows all cell blocks.  Residuals are mass balances in
bbl/day * lbm/ft^3 (bulk volumes enter in bbl so that accumulation and
Darcy terms share units):

    R = V (m^{n+1} - m^n)/dt - sum(inflow) + transfer - well source

where the matrix-fracture transfer ``q = Tmf * (k_r rho/mu)_up * (p_f - p_m)``
leaves the fracture and enters the matrix.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .grid import Grid
from .linear.blockmatrix import BlockMatrix, BlockPattern
from .parallel import SERIAL
from .props import UNITS, PvtOil, PvtWater, SatFuncTable, eval_satfunc, oil_density, porosity, water_density
from .wells import BHP, WellSpec, perforation_pressure, perforation_rate, resolve_well_index

OIL, WATER = 0, 1


class PropertyError(ArithmeticError):
    def __init__(self, cell, message):
        self.cell = int(cell)
        super().__init__(f"cell {self.cell}: {message}")


@dataclass
class State:
    """Primary unknowns: ``cells`` is (n, 4) for dual porosity or (n, 2) for fracture-only."""

    cells: np.ndarray
    p_bh: np.ndarray

    @property
    def p_f(self):
        return self.cells[:, 0]

    @property
    def s_wf(self):
        return self.cells[:, 1]

    @property
    def p_m(self):
        return self.cells[:, 2]

    @property
    def s_wm(self):
        return self.cells[:, 3]

    @property
    def block_size(self):
        return self.cells.shape[1]

    def vector(self):
        return np.concatenate([self.cells.ravel(), self.p_bh])

    @classmethod
    def from_vector(cls, x, n_cells, block_size=4):
        nc = n_cells * block_size
        return cls(np.array(x[:nc], dtype=float).reshape(n_cells, block_size), np.array(x[nc:], dtype=float))

    def copy(self):
        return State(self.cells.copy(), self.p_bh.copy())


@dataclass(eq=False)
class Model:
    grid: Grid
    oil: PvtOil
    water: PvtWater
    table_matrix: SatFuncTable
    table_fracture: SatFuncTable
    wells: list[WellSpec] = field(default_factory=list)
    gravity: bool = True
    scale_residual: bool = True
    diagnostics: Counter = field(default_factory=Counter, repr=False)

    @property
    def n_cells(self):
        return self.grid.n_cells

    @property
    def n_wells(self):
        return len(self.wells)

    @property
    def g(self):
        return UNITS.grav_const if self.gravity else 0.0

    @cached_property
    def pattern(self) -> BlockPattern:
        return BlockPattern.from_connections(self.n_cells, self.grid.conn_i, self.grid.conn_j)

    @cached_property
    def perfs(self):
        """Flattened perforation data: cell, well, well index (mD*ft), depth, injector flag."""
        cell, well, wi, inj = [], [], [], []
        for w, spec in enumerate(self.wells):
            for perf in spec.perforations:
                cell.append(perf.cell)
                well.append(w)
                wi.append(resolve_well_index(perf, self.grid))
                inj.append(spec.is_injector)
        cell = np.asarray(cell, dtype=np.int64)
        return {
            "cell": cell,
            "well": np.asarray(well, dtype=np.int64),
            "wi": np.asarray(wi, dtype=float),
            "depth": self.grid.depth[cell] if len(cell) else np.zeros(0),
            "injector": np.asarray(inj, dtype=bool),
        }

    @cached_property
    def ref_depths(self):
        out = np.empty(self.n_wells)
        for w, spec in enumerate(self.wells):
            out[w] = spec.ref_depth if spec.ref_depth is not None else self.grid.depth[spec.perforations[0].cell]
        return out


@dataclass
class ContinuumEval:
    """Phase-stacked properties of one continuum; arrays are (2, n) with row 0 oil, row 1 water."""

    pres: np.ndarray  # phase pressure
    pres_s: np.ndarray  # d(phase pressure)/ds_w (d/dp is 1)
    rho: np.ndarray
    rho_p: np.ndarray
    rho_s: np.ndarray
    mob: np.ndarray  # k_r * rho / mu
    mob_p: np.ndarray
    mob_s: np.ndarray
    mass: np.ndarray  # phi * s * rho per unit bulk volume
    mass_p: np.ndarray
    mass_s: np.ndarray


def evaluate_continuum(p, s, rock, table: SatFuncTable, oil: PvtOil, water: PvtWater, diagnostics=None):
    p = np.asarray(p, dtype=float)
    s = np.asarray(s, dtype=float)
    krw, kro, pc, dkrw, dkro, dpc = eval_satfunc(s, table)
    pw = p - pc
    rho_o, rho_o_p = oil_density(p, oil)
    rho_w, rho_w_pw = water_density(pw, water)
    phi, dphi = porosity(p, rock, diagnostics)
    rho_w_s = -rho_w_pw * dpc
    zero = np.zeros_like(p)
    so = 1.0 - s
    return ContinuumEval(
        pres=np.stack([p, pw]),
        pres_s=np.stack([zero, -dpc]),
        rho=np.stack([rho_o, rho_w]),
        rho_p=np.stack([rho_o_p, rho_w_pw]),
        rho_s=np.stack([zero, rho_w_s]),
        mob=np.stack([kro * rho_o / oil.mu_o, krw * rho_w / water.mu_w]),
        mob_p=np.stack([kro * rho_o_p / oil.mu_o, krw * rho_w_pw / water.mu_w]),
        mob_s=np.stack([dkro * rho_o / oil.mu_o, (dkrw * rho_w + krw * rho_w_s) / water.mu_w]),
        mass=np.stack([phi * so * rho_o, phi * s * rho_w]),
        mass_p=np.stack([dphi * so * rho_o + phi * so * rho_o_p, dphi * s * rho_w + phi * s * rho_w_pw]),
        mass_s=np.stack([-phi * rho_o, phi * rho_w + phi * s * rho_w_s]),
    )


def _check_finite(ev: ContinuumEval, what):
    bad = ~np.all(np.isfinite(ev.mass), axis=0) | ~np.all(np.isfinite(ev.mob), axis=0)
    if np.any(bad):
        raise PropertyError(np.flatnonzero(bad)[0], f"non-finite {what} properties")


def in_place_mass(model: Model, state: State):
    """Phase masses in place, shape (2, n) oil then water, bbl*lbm/ft^3, summed over continua."""
    g = model.grid
    vol = g.bulk_volume_bbl
    f = evaluate_continuum(state.p_f, state.s_wf, g.fracture.rock, model.table_fracture, model.oil, model.water)
    total = vol * f.mass
    if state.block_size == 4:
        m = evaluate_continuum(state.p_m, state.s_wm, g.matrix.rock, model.table_matrix, model.oil, model.water)
        total = total + vol * m.mass
    return total


def accumulation(volume, dt, mass_new, mass_old):
    """Backward-Euler accumulation ``V*(m_new - m_old)/dt`` (any consistent units)."""
    return volume * (np.asarray(mass_new) - np.asarray(mass_old)) / dt


def fracture_flux(trans, dz, g, ev_i: ContinuumEval, ev_j: ContinuumEval):
    """Phase fluxes into cell i from cell j over a set of connections.

    ``ev_i``/``ev_j`` are the continuum evaluations gathered at the two ends.
    Returns ``F`` (2, m) and its derivatives with respect to (p_i, s_i, p_j,
    s_j), each (2, m).  Cell i receives ``-F`` in its residual, cell j ``+F``.
    """
    rbar = 0.5 * (ev_i.rho + ev_j.rho)
    gdz = g * dz
    dphi = ev_j.pres - ev_i.pres - rbar * gdz
    up_j = dphi > 0
    mob_up = np.where(up_j, ev_j.mob, ev_i.mob)
    F = trans * mob_up * dphi
    dF_dpi = trans * (np.where(up_j, 0.0, ev_i.mob_p) * dphi + mob_up * (-1.0 - 0.5 * ev_i.rho_p * gdz))
    dF_dsi = trans * (np.where(up_j, 0.0, ev_i.mob_s) * dphi + mob_up * (-ev_i.pres_s - 0.5 * ev_i.rho_s * gdz))
    dF_dpj = trans * (np.where(up_j, ev_j.mob_p, 0.0) * dphi + mob_up * (1.0 - 0.5 * ev_j.rho_p * gdz))
    dF_dsj = trans * (np.where(up_j, ev_j.mob_s, 0.0) * dphi + mob_up * (ev_j.pres_s - 0.5 * ev_j.rho_s * gdz))
    return F, dF_dpi, dF_dsi, dF_dpj, dF_dsj


def transfer_term(tmf, ev_f: ContinuumEval, ev_m: ContinuumEval):
    """Matrix-fracture exchange per phase, positive from fracture to matrix.

    The upstream continuum is the one with the higher phase pressure.
    Returns q (2, n) and its derivatives with respect to (p_f, s_f, p_m, s_m).
    """
    delta = ev_f.pres - ev_m.pres
    up_m = delta < 0
    mob_up = np.where(up_m, ev_m.mob, ev_f.mob)
    q = tmf * mob_up * delta
    dq_pf = tmf * (np.where(up_m, 0.0, ev_f.mob_p) * delta + mob_up)
    dq_sf = tmf * (np.where(up_m, 0.0, ev_f.mob_s) * delta + mob_up * ev_f.pres_s)
    dq_pm = tmf * (np.where(up_m, ev_m.mob_p, 0.0) * delta - mob_up)
    dq_sm = tmf * (np.where(up_m, ev_m.mob_s, 0.0) * delta - mob_up * ev_m.pres_s)
    return q, dq_pf, dq_sf, dq_pm, dq_sm


def _gather(ev: ContinuumEval, idx):
    return ContinuumEval(*(getattr(ev, f)[:, idx] for f in ContinuumEval.__dataclass_fields__))


def _slice(ev: ContinuumEval, lo, hi):
    return _gather(ev, slice(lo, hi))


@dataclass
class AssemblyResult:
    jac: BlockMatrix
    residual: np.ndarray  # scaled, full length
    raw: np.ndarray  # unscaled, full length
    row_scale: np.ndarray  # per entry of residual
    mass_in_place: np.ndarray  # (2,) phase totals at the new state
    phase_imbalance: np.ndarray  # (2,) sum of unscaled cell residuals per phase
    perf_rates: np.ndarray  # (m, 2) mass rates into the cells
    well_rates: np.ndarray  # (n_wells, 2) signed surface rates STB/day


def mixture_densities(model: Model, state: State, controls=None):
    """Wellbore fluid density per well for the hydrostatic perforation correction.

    Injectors use water at the bottom-hole pressure; producers use the
    rate-weighted density of the produced fluid at ``state`` (falling back to
    the saturation-weighted cell density when there is no flow).
    """
    out = np.zeros(model.n_wells)
    if not model.n_wells:
        return out
    pf = model.perfs
    g = model.grid
    ev = evaluate_continuum(state.p_f, state.s_wf, g.fracture.rock, model.table_fracture, model.oil, model.water)
    for w, spec in enumerate(model.wells):
        if spec.is_injector:
            out[w] = water_density(state.p_bh[w], model.water)[0]
            continue
        cells = pf["cell"][pf["well"] == w]
        wi = pf["wi"][pf["well"] == w]
        dp = np.maximum(state.p_f[cells] - state.p_bh[w], 0.0)
        vol = wi * dp * (ev.mob[:, cells] / ev.rho[:, cells])  # reservoir volume rates per phase
        if vol.sum() > 0:
            out[w] = float((vol * ev.rho[:, cells]).sum() / vol.sum())
        else:
            s = state.s_wf[cells]
            out[w] = float(np.mean((1 - s) * ev.rho[0, cells] + s * ev.rho[1, cells]))
    return out


def assemble(model: Model, new: State, old: State, dt, controls=None, rho_mix=None, pool=SERIAL) -> AssemblyResult:
    """Residual and analytic Jacobian of the dual-porosity system at ``new``.

    ``controls`` lists the active constraint per well (defaults to each well's
    initial control); ``rho_mix`` is the frozen wellbore density per well.
    """
    if not dt > 0:
        raise ValueError("time step must be positive")
    g = model.grid
    n = g.n_cells
    b = 4
    vol = g.bulk_volume_bbl
    grav = model.g
    controls = controls or [w.control for w in model.wells]
    if rho_mix is None:
        rho_mix = mixture_densities(model, new)

    evs = {}

    def props(lo, hi):
        for key, st, col, rock, tab in (
            ("f", new, 0, g.fracture.rock, model.table_fracture),
            ("m", new, 2, g.matrix.rock, model.table_matrix),
            ("fo", old, 0, g.fracture.rock, model.table_fracture),
            ("mo", old, 2, g.matrix.rock, model.table_matrix),
        ):
            evs[(key, lo)] = evaluate_continuum(
                st.cells[lo:hi, col], st.cells[lo:hi, col + 1], _rock_slice(rock, lo, hi), tab,
                model.oil, model.water, model.diagnostics)

    chunks = pool.map_ranges(lambda lo, hi: (props(lo, hi), (lo, hi))[1], n, min_chunk=512)
    ev_f = _concat([evs[("f", lo)] for lo, _ in chunks])
    ev_m = _concat([evs[("m", lo)] for lo, _ in chunks])
    mass_f_old = np.concatenate([evs[("fo", lo)].mass for lo, _ in chunks], axis=1)
    mass_m_old = np.concatenate([evs[("mo", lo)].mass for lo, _ in chunks], axis=1)
    _check_finite(ev_f, "fracture")
    _check_finite(ev_m, "matrix")

    # connection terms, elementwise per connection
    ci, cj = g.conn_i, g.conn_j
    nconn = len(ci)
    F = np.empty((2, nconn))
    dFi = np.empty((2, 2, nconn))  # [phase, (p, s)]
    dFj = np.empty((2, 2, nconn))

    def conns(lo, hi):
        i, j = ci[lo:hi], cj[lo:hi]
        f, dpi, dsi, dpj, dsj = fracture_flux(
            g.trans[lo:hi], g.depth[j] - g.depth[i], grav, _gather(ev_f, i), _gather(ev_f, j))
        F[:, lo:hi] = f
        dFi[:, 0, lo:hi], dFi[:, 1, lo:hi] = dpi, dsi
        dFj[:, 0, lo:hi], dFj[:, 1, lo:hi] = dpj, dsj

    pool.map_ranges(conns, nconn, min_chunk=512)

    jac = BlockMatrix.zeros(model.pattern, b, model.perfs["cell"], model.perfs["well"], model.n_wells)
    data = jac.data
    R = np.zeros((n, b))
    pat = model.pattern
    tmf = g.transfer_trans

    def rows(lo, hi):
        sl = slice(lo, hi)
        dv = vol[sl] / dt
        diag = np.zeros((hi - lo, b, b))
        res = np.zeros((hi - lo, b))
        # accumulation
        for a in (OIL, WATER):
            res[:, a] = dv * (ev_f.mass[a, sl] - mass_f_old[a, sl])
            res[:, 2 + a] = dv * (ev_m.mass[a, sl] - mass_m_old[a, sl])
            diag[:, a, 0] = dv * ev_f.mass_p[a, sl]
            diag[:, a, 1] = dv * ev_f.mass_s[a, sl]
            diag[:, 2 + a, 2] = dv * ev_m.mass_p[a, sl]
            diag[:, 2 + a, 3] = dv * ev_m.mass_s[a, sl]
        # matrix-fracture transfer
        q, dq_pf, dq_sf, dq_pm, dq_sm = transfer_term(tmf[sl], _slice(ev_f, lo, hi), _slice(ev_m, lo, hi))
        for a in (OIL, WATER):
            res[:, a] += q[a]
            res[:, 2 + a] -= q[a]
            for col, d in enumerate((dq_pf[a], dq_sf[a], dq_pm[a], dq_sm[a])):
                diag[:, a, col] += d
                diag[:, 2 + a, col] -= d
        # fracture fluxes, fixed face order
        slots = g.cell_conn[sl]
        signs = g.cell_conn_sign[sl]
        for k in range(6 if nconn else 0):
            sgn = signs[:, k]
            cidx = np.where(sgn != 0, slots[:, k], 0)
            own_i = sgn == 1
            own_j = sgn == -1
            fk = F[:, cidx]
            res[:, 0:2] += np.where(own_j, fk, np.where(own_i, -fk, 0.0)).T
            dd = np.where(own_j, dFj[:, :, cidx], np.where(own_i, -dFi[:, :, cidx], 0.0))
            diag[:, 0:2, 0:2] += dd.transpose(2, 0, 1)
            rows_i = np.flatnonzero(own_i)
            if rows_i.size:
                data[pat.pos_ij[cidx[rows_i]], 0:2, 0:2] = -dFj[:, :, cidx[rows_i]].transpose(2, 0, 1)
            rows_j = np.flatnonzero(own_j)
            if rows_j.size:
                data[pat.pos_ji[cidx[rows_j]], 0:2, 0:2] = dFi[:, :, cidx[rows_j]].transpose(2, 0, 1)
        data[pat.diag_ptr[sl]] = diag
        R[sl] = res

    pool.map_ranges(rows, n, min_chunk=512)

    # wells, sequential in perforation order
    nw = model.n_wells
    Rw = np.zeros(nw)
    perf_rates, well_rates = _well_terms(model, new, ev_f, controls, rho_mix, R, jac, Rw)

    raw = np.concatenate([R.ravel(), Rw])
    if model.scale_residual:
        cell_scale = dt / vol
    else:
        cell_scale = np.ones(n)
    scale = np.concatenate([np.repeat(cell_scale, b), _well_scale(model, controls)])
    row_of = np.repeat(np.arange(n), np.diff(pat.indptr))
    data *= cell_scale[row_of][:, None, None]
    jac.border_col *= cell_scale[jac.perf_cell][:, None]
    ws = scale[n * b :]
    jac.border_row *= ws[jac.perf_well][:, None]
    jac.well_diag *= ws

    mass = vol * (ev_f.mass + ev_m.mass)
    imbalance = R[:, 0:2].sum(axis=0) + R[:, 2:4].sum(axis=0)
    return AssemblyResult(
        jac=jac,
        residual=raw * scale,
        raw=raw,
        row_scale=scale,
        mass_in_place=mass.sum(axis=1),
        phase_imbalance=imbalance,
        perf_rates=perf_rates,
        well_rates=well_rates,
    )


def _rock_slice(rock, lo, hi):
    phi = np.asarray(rock.phi_ref)
    if phi.ndim == 0:
        return rock
    return type(rock)(phi[lo:hi], rock.c_r, rock.p_ref)


def _concat(evs):
    if len(evs) == 1:
        return evs[0]
    return ContinuumEval(*(np.concatenate([getattr(e, f) for e in evs], axis=1)
                           for f in ContinuumEval.__dataclass_fields__))


def _well_scale(model, controls):
    out = np.ones(model.n_wells)
    for w, spec in enumerate(model.wells):
        if controls[w] != BHP:
            out[w] = 1.0 / max(abs(spec.rate_target), 1.0)
    return out


def _well_terms(model, state, ev_f, controls, rho_mix, R, jac, Rw):
    """Perforation sources into fracture rows plus the well constraint rows.

    Works for any block size whose first two columns are the fracture (p, s_w).
    Returns per-perforation mass rates (m, 2) and per-well surface rates (nw, 2).
    """
    pf = model.perfs
    m = len(pf["cell"])
    nw = model.n_wells
    perf_rates = np.zeros((m, 2))
    well_rates = np.zeros((nw, 2))
    if not nw:
        return perf_rates, well_rates
    grav = model.g
    data = jac.data
    diag_ptr = model.pattern.diag_ptr
    rho_sc = np.array([model.oil.rho_sc, model.water.rho_sc])
    cells = pf["cell"]
    wells = pf["well"]
    p_perf = perforation_pressure(state.p_bh[wells], model.ref_depths[wells], pf["depth"], rho_mix[wells], grav)
    p_cell = state.p_f[cells]
    e = _gather(ev_f, cells)
    inj = pf["injector"]
    zero = np.zeros(m)
    dq = np.zeros((m, 2, 3))  # d q_phase / (p_cell, s_cell, p_bh)
    for a in (OIL, WATER):
        if a == OIL:
            inj_mob = (zero, zero, zero)
        else:
            inj_mob = (e.rho[WATER] / model.water.mu_w, e.rho_p[WATER] / model.water.mu_w, e.rho_s[WATER] / model.water.mu_w)
        q, dqp, dqs, dqb = perforation_rate(pf["wi"], p_cell, p_perf, (e.mob[a], e.mob_p[a], e.mob_s[a]))
        qi, dqpi, dqsi, dqbi = perforation_rate(pf["wi"], p_cell, p_perf, (e.mob[a], e.mob_p[a], e.mob_s[a]), inj_mob)
        perf_rates[:, a] = np.where(inj, qi, q)
        dq[:, a, 0] = np.where(inj, dqpi, dqp)
        dq[:, a, 1] = np.where(inj, dqsi, dqs)
        dq[:, a, 2] = np.where(inj, dqbi, dqb)
    for k in range(m):
        c, w = cells[k], wells[k]
        R[c, 0:2] -= perf_rates[k]
        data[diag_ptr[c], 0:2, 0:2] -= dq[k, :, 0:2]
        jac.border_col[k, 0:2] = -dq[k, :, 2]
        well_rates[w] += perf_rates[k] / rho_sc
    for w, spec in enumerate(model.wells):
        ks = np.flatnonzero(wells == w)
        if controls[w] == BHP:
            Rw[w] = state.p_bh[w] - spec.bhp_limit
            jac.well_diag[w] = 1.0
            continue
        a = WATER if spec.is_injector else OIL
        Rw[w] = well_rates[w, a] - spec.rate_target
        jac.border_row[ks, 0:2] = dq[ks, a, 0:2] / rho_sc[a]
        jac.well_diag[w] = dq[ks, a, 2].sum() / rho_sc[a]
    return perf_rates, well_rates


def assemble_single_porosity(model: Model, new: State, old: State, dt, controls=None, rho_mix=None,
                             pool=SERIAL) -> AssemblyResult:
    """Fracture-only two-phase assembly with (p, s_w) per cell.

    Serves as the reference the dual-porosity system must reduce to when the
    shape factor is zero.  Flux contributions are scattered connection by
    connection instead of gathered per cell.
    """
    g = model.grid
    n = g.n_cells
    b = 2
    vol = g.bulk_volume_bbl
    controls = controls or [w.control for w in model.wells]
    if rho_mix is None:
        rho_mix = mixture_densities(model, new)
    ev = evaluate_continuum(new.cells[:, 0], new.cells[:, 1], g.fracture.rock, model.table_fracture,
                            model.oil, model.water, model.diagnostics)
    ev_old = evaluate_continuum(old.cells[:, 0], old.cells[:, 1], g.fracture.rock, model.table_fracture,
                                model.oil, model.water)
    _check_finite(ev, "fracture")
    pat = model.pattern
    jac = BlockMatrix.zeros(pat, b, model.perfs["cell"], model.perfs["well"], model.n_wells)
    R = np.zeros((n, b))
    dv = vol / dt
    for a in (OIL, WATER):
        R[:, a] = dv * (ev.mass[a] - ev_old.mass[a])
        jac.data[pat.diag_ptr, a, 0] = dv * ev.mass_p[a]
        jac.data[pat.diag_ptr, a, 1] = dv * ev.mass_s[a]
    for k in range(g.n_connections):
        i, j = g.conn_i[k], g.conn_j[k]
        f, dpi, dsi, dpj, dsj = fracture_flux(g.trans[k], g.depth[j] - g.depth[i], model.g,
                                              _gather(ev, [i]), _gather(ev, [j]))
        di = np.column_stack([dpi[:, 0], dsi[:, 0]])
        dj = np.column_stack([dpj[:, 0], dsj[:, 0]])
        R[i] -= f[:, 0]
        R[j] += f[:, 0]
        jac.data[pat.diag_ptr[i]] -= di
        jac.data[pat.pos_ij[k]] -= dj
        jac.data[pat.diag_ptr[j]] += dj
        jac.data[pat.pos_ji[k]] += di
    Rw = np.zeros(model.n_wells)
    perf_rates, well_rates = _well_terms(model, new, ev, controls, rho_mix, R, jac, Rw)
    raw = np.concatenate([R.ravel(), Rw])
    cell_scale = dt / vol if model.scale_residual else np.ones(n)
    scale = np.concatenate([np.repeat(cell_scale, b), _well_scale(model, controls)])
    row_of = np.repeat(np.arange(n), np.diff(pat.indptr))
    jac.data *= cell_scale[row_of][:, None, None]
    jac.border_col *= cell_scale[jac.perf_cell][:, None]
    ws = scale[n * b:]
    jac.border_row *= ws[jac.perf_well][:, None]
    jac.well_diag *= ws
    return AssemblyResult(
        jac=jac,
        residual=raw * scale,
        raw=raw,
        row_scale=scale,
        mass_in_place=(vol * ev.mass).sum(axis=1),
        phase_imbalance=R.sum(axis=0),
        perf_rates=perf_rates,
        well_rates=well_rates,
    )
