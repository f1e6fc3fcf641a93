"""Block-row decoupling by Gauss-Jordan inversion of the diagonal blocks."""
from __future__ import annotations

import numpy as np

from ..parallel import SERIAL
from . import kernels
from .blockmatrix import BlockMatrix


class SingularBlockError(ArithmeticError):
    def __init__(self, cell, what="diagonal block"):
        self.cell = int(cell)
        super().__init__(f"singular {what} at cell {self.cell}")


def decoupling_factors(A: BlockMatrix, pool=SERIAL):
    """Per-cell inverses of the diagonal blocks together with the decoupled cell blocks."""
    pat = A.pattern
    b = A.block_size
    out = np.empty_like(A.data)
    dinv = np.empty((pat.n, b, b))
    bad = pool.map_ranges(
        lambda lo, hi: kernels.decouple_rows(pat.indptr, pat.diag_ptr, A.data, out, dinv, lo, hi),
        pat.n,
        min_chunk=256,
    )
    for r in bad:
        if r >= 0:
            raise SingularBlockError(r)
    return dinv, out


def apply_factors(dinv, v, n_cells):
    """Left-multiply each cell segment of ``v`` by its factor; well entries pass through."""
    b = dinv.shape[1]
    out = np.array(v, dtype=float, copy=True)
    cells = out[: n_cells * b].reshape(n_cells, b)
    cells[:] = np.einsum("nij,nj->ni", dinv, cells)
    return out


def decouple(A: BlockMatrix, rhs=None, pool=SERIAL):
    """Return ``(D^-1 A, D^-1 rhs)`` with D the block diagonal of the cell rows.

    Every cell diagonal block of the result is the identity; well rows are
    left untouched, so the solution set is unchanged.
    """
    dinv, data = decoupling_factors(A, pool)
    Ad = A.copy()
    Ad.data = data
    if len(A.perf_cell):
        Ad.border_col = np.einsum("mij,mj->mi", dinv[A.perf_cell], A.border_col)
    if rhs is None:
        return Ad, None
    return Ad, apply_factors(dinv, rhs, A.n_cells)
