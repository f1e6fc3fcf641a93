"""Block ILU(0) factorization with level-scheduled triangular sweeps."""
from __future__ import annotations

import numpy as np

from ..parallel import SERIAL
from . import kernels
from .decouple import SingularBlockError


class BlockILU0:
    """ILU(0) on the cell-block pattern of ``data``.

    A singular pivot block triggers one retry with every diagonal shifted by
    1e-8 times its block-row norm; a second failure raises.
    """

    def __init__(self, pattern, data, pool=SERIAL):
        self.pattern = pattern
        self.pool = pool
        self.b = data.shape[1]
        self.shifted = False
        self.lu, self.dinv = self._factor(data, np.zeros(pattern.n))
        if self.lu is None:
            row_norm = np.zeros(pattern.n)
            np.maximum.at(row_norm, np.repeat(np.arange(pattern.n), np.diff(pattern.indptr)),
                          np.abs(data).max(axis=(1, 2)))
            self.shifted = True
            self.lu, self.dinv = self._factor(data, 1e-8 * np.maximum(row_norm, 1e-300))
            if self.lu is None:
                raise SingularBlockError(self._bad_row, "ILU(0) pivot block")

    def _factor(self, data, shift):
        pat = self.pattern
        lu = np.array(data, copy=True)
        dinv = np.empty((pat.n, self.b, self.b))
        bad = kernels.ilu0_factor(pat.indptr, pat.indices, pat.diag_ptr, lu, dinv, shift)
        if bad >= 0:
            self._bad_row = bad
            return None, None
        return lu, dinv

    def solve(self, r):
        pat = self.pattern
        r = np.ascontiguousarray(r, dtype=float)
        y = np.empty_like(r)
        z = np.empty_like(r)
        if self.pool.threads == 1:
            rows = np.arange(pat.n)
            kernels.ilu_lower_rows(rows, pat.indptr, pat.indices, pat.diag_ptr, self.lu, r, y)
            kernels.ilu_upper_rows(rows[::-1].copy(), pat.indptr, pat.indices, pat.diag_ptr,
                                   self.lu, self.dinv, y, z)
            return z
        # rows within a level are independent; each row's arithmetic is the same as in the serial sweep
        for group in pat.levels(lower=True):
            self.pool.map_ranges(
                lambda lo, hi, g=group: kernels.ilu_lower_rows(
                    g[lo:hi], pat.indptr, pat.indices, pat.diag_ptr, self.lu, r, y),
                len(group), min_chunk=64)
        for group in pat.levels(lower=False):
            self.pool.map_ranges(
                lambda lo, hi, g=group: kernels.ilu_upper_rows(
                    g[lo:hi], pat.indptr, pat.indices, pat.diag_ptr, self.lu, self.dinv, y, z),
                len(group), min_chunk=64)
        return z

    __call__ = solve
