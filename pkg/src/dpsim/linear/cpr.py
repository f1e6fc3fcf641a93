"""Two-level CPR-FPF preconditioner on a decoupled block system.

Well unknowns are eliminated with their scalar diagonal (block LDU on the
well border), leaving a cell-only Schur operator.  On that operator the
preconditioner applies a block-ILU(0) sweep, a pressure correction on the
pressure unknowns of each cell, and a second block-ILU(0) sweep.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..parallel import SERIAL
from .blockmatrix import BlockMatrix
from .gmres import bicgstab, gmres, pcg
from .ilu import BlockILU0


@dataclass
class CprConfig:
    pressure_set: tuple = (0, 2)
    mode: str = "cpr"  # "cpr" (F-P-F) or "ilu" (block ILU(0) only)
    pressure_solver: str = "cg"
    pressure_max_iters: int = 30
    pressure_rtol: float = 1e-1

    def __post_init__(self):
        self.pressure_set = tuple(int(i) for i in self.pressure_set)
        if not self.pressure_set:
            raise ValueError("pressure set must not be empty")
        if self.mode not in ("cpr", "ilu"):
            raise ValueError(f"unknown preconditioner mode {self.mode!r}")


def _pressure_solver_cg(A, ilu, cfg, pool):
    return lambda r: pcg(A, r, ilu, cfg.pressure_rtol, cfg.pressure_max_iters, pool)


def _pressure_solver_bicgstab(A, ilu, cfg, pool):
    return lambda r: bicgstab(A, r, ilu, cfg.pressure_rtol, cfg.pressure_max_iters, pool)


def _pressure_solver_gmres(A, ilu, cfg, pool):
    return lambda r: gmres(A, r, ilu, cfg.pressure_rtol, cfg.pressure_max_iters,
                           cfg.pressure_max_iters, pool=pool)


def _pressure_solver_ilu(A, ilu, cfg, pool):
    class _One:
        def __init__(self, x):
            self.x, self.iterations = x, 1

    return lambda r: _One(ilu(r))


PRESSURE_SOLVERS = {
    "cg": _pressure_solver_cg,
    "bicgstab": _pressure_solver_bicgstab,
    "gmres": _pressure_solver_gmres,
    "ilu": _pressure_solver_ilu,
}


@dataclass(eq=False)
class CprFpf:
    A: BlockMatrix  # decoupled system
    config: CprConfig = field(default_factory=CprConfig)
    pool: object = SERIAL

    def __post_init__(self):
        A, cfg = self.A, self.config
        pat = A.pattern
        b = A.block_size
        if max(cfg.pressure_set) >= b:
            raise ValueError("pressure set index exceeds block size")
        self.nc = A.n_cell_unknowns
        wd = A.well_diag.copy()
        tiny = 1e-30
        wd[np.abs(wd) < tiny] = tiny
        self.well_diag = wd

        # Schur complement restricted to the cell pattern
        S = A.data.copy()
        if A.n_wells:
            cells, wells = A.perf_cell, A.perf_well
            for w in range(A.n_wells):
                ms = np.nonzero(wells == w)[0]
                for m1 in ms:
                    pos = pat.find(np.full(len(ms), cells[m1]), cells[ms])
                    for m2, p in zip(ms, pos):
                        if p >= 0:
                            S[p] -= np.outer(A.border_col[m1], A.border_row[m2]) / wd[w]
        self.S = S
        self.ilu = BlockILU0(pat, S, self.pool)
        self.pidx = np.array(cfg.pressure_set)
        self.pressure_iterations = 0
        if cfg.mode == "cpr":
            Pdata = np.ascontiguousarray(S[:, self.pidx][:, :, self.pidx])
            self.App = BlockMatrix(pat, Pdata)
            self.p_ilu = BlockILU0(pat, Pdata, self.pool)
            self.p_solve = PRESSURE_SOLVERS[cfg.pressure_solver](self.App, self.p_ilu, cfg, self.pool)

    def schur_matvec(self, x):
        """Exact action of A_cc - B diag(D)^-1 C on a cell vector."""
        A = self.A
        y = A.cell_matvec(x, self.pool)
        if A.n_wells:
            b = A.block_size
            xc = x.reshape(-1, b)
            t = np.zeros(A.n_wells)
            for m in range(len(A.perf_cell)):
                t[A.perf_well[m]] += A.border_row[m] @ xc[A.perf_cell[m]]
            t /= self.well_diag
            yc = y.reshape(-1, b)
            for m in range(len(A.perf_cell)):
                yc[A.perf_cell[m]] -= A.border_col[m] * t[A.perf_well[m]]
        return y

    def _cells(self, r):
        z = self.ilu(r)
        if self.config.mode == "ilu":
            return z
        b = self.A.block_size
        res = r - self.schur_matvec(z)
        rp = np.ascontiguousarray(res.reshape(-1, b)[:, self.pidx]).ravel()
        sol = self.p_solve(rp)
        self.pressure_iterations += sol.iterations
        zc = z.reshape(-1, b)
        zc[:, self.pidx] += sol.x.reshape(-1, len(self.pidx))
        res = r - self.schur_matvec(z)
        return z + self.ilu(res)

    def apply(self, r):
        A = self.A
        nc = self.nc
        r = np.asarray(r, dtype=float)
        rc = np.array(r[:nc], copy=True)
        rw = r[nc:]
        b = A.block_size
        if A.n_wells:
            t = rw / self.well_diag
            rcb = rc.reshape(-1, b)
            for m in range(len(A.perf_cell)):
                rcb[A.perf_cell[m]] -= A.border_col[m] * t[A.perf_well[m]]
        zc = self._cells(rc)
        if not A.n_wells:
            return zc
        zw = rw.copy()
        zcb = zc.reshape(-1, b)
        for m in range(len(A.perf_cell)):
            zw[A.perf_well[m]] -= A.border_row[m] @ zcb[A.perf_cell[m]]
        return np.concatenate([zc, zw / self.well_diag])

    __call__ = apply
