"""Block-CSR matrix with square cell blocks and a sparse well border.

Unknowns are ordered cell by cell (``b`` per cell) followed by one unknown
per well.  The well border is stored per perforation:

* ``border_col[m]`` -- column of well ``perf_well[m]`` in the rows of cell
  ``perf_cell[m]`` (length-b vector),
* ``border_row[m]`` -- row of well ``perf_well[m]`` in the columns of cell
  ``perf_cell[m]``,
* ``well_diag[w]`` -- the well's own diagonal entry.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..parallel import SERIAL
from . import kernels

DOT_CHUNK = 4096


def dot(x, y, pool=SERIAL):
    """Inner product with a fixed chunked reduction order (worker-count independent)."""
    n = x.shape[0]
    nchunks = max(1, -(-n // DOT_CHUNK))
    partial = np.zeros(nchunks)
    pool.map_ranges(lambda lo, hi: kernels.chunk_dots(x, y, partial, lo, hi, DOT_CHUNK), nchunks)
    total = 0.0
    for v in partial:
        total += v
    return total


def norm(x, pool=SERIAL):
    return float(np.sqrt(dot(x, x, pool)))


@dataclass(eq=False)
class BlockPattern:
    """Sparsity of the cell blocks; shared by every matrix on the same grid."""

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    diag_ptr: np.ndarray
    # block positions of (i, j) and (j, i) for each input connection
    pos_ij: np.ndarray
    pos_ji: np.ndarray
    _levels: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_connections(cls, n, conn_i, conn_j):
        conn_i = np.asarray(conn_i, dtype=np.int64)
        conn_j = np.asarray(conn_j, dtype=np.int64)
        rows = np.concatenate([np.arange(n), conn_i, conn_j])
        cols = np.concatenate([np.arange(n), conn_j, conn_i])
        order = np.lexsort((cols, rows))
        rows, cols = rows[order], cols[order]
        keep = np.ones(len(rows), dtype=bool)
        keep[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
        rows, cols = rows[keep], cols[keep]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(indptr, rows + 1, 1)
        indptr = np.cumsum(indptr)
        indices = cols.astype(np.int64)
        pat = cls(n, indptr, indices, None, None, None)
        pat.diag_ptr = pat.find(np.arange(n), np.arange(n))
        pat.pos_ij = pat.find(conn_i, conn_j)
        pat.pos_ji = pat.find(conn_j, conn_i)
        return pat

    @property
    def nnzb(self):
        return len(self.indices)

    def find(self, rows, cols):
        """Block positions of (row, col) pairs; -1 where absent."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        row_of = np.repeat(np.arange(self.n, dtype=np.int64), np.diff(self.indptr))
        keys = row_of * self.n + self.indices  # globally sorted (row-major, sorted columns)
        want = rows * self.n + cols
        k = np.minimum(np.searchsorted(keys, want), len(keys) - 1)
        return np.where(keys[k] == want, k, -1)

    def levels(self, lower):
        """Row lists grouped by triangular-sweep dependency level (cached)."""
        key = bool(lower)
        if key not in self._levels:
            lv = kernels.level_sets(self.indptr, self.indices, self.diag_ptr, key)
            order = np.argsort(lv, kind="stable")
            bounds = np.searchsorted(lv[order], np.arange(lv.max() + 2))
            groups = [order[bounds[k] : bounds[k + 1]] for k in range(len(bounds) - 1)]
            if not key:
                # within a level the order is irrelevant, but keep descending for readability
                groups = [g[::-1].copy() for g in groups]
            self._levels[key] = groups
        return self._levels[key]


@dataclass(eq=False)
class BlockMatrix:
    pattern: BlockPattern
    data: np.ndarray  # (nnzb, b, b)
    perf_cell: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    perf_well: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    border_col: np.ndarray = None  # (m, b)
    border_row: np.ndarray = None  # (m, b)
    well_diag: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        b = self.block_size
        m = len(self.perf_cell)
        if self.border_col is None:
            self.border_col = np.zeros((m, b))
        if self.border_row is None:
            self.border_row = np.zeros((m, b))

    @classmethod
    def zeros(cls, pattern, block_size, perf_cell=(), perf_well=(), n_wells=0):
        perf_cell = np.asarray(perf_cell, dtype=np.int64)
        perf_well = np.asarray(perf_well, dtype=np.int64)
        return cls(
            pattern,
            np.zeros((pattern.nnzb, block_size, block_size)),
            perf_cell,
            perf_well,
            None,
            None,
            np.zeros(n_wells),
        )

    @property
    def block_size(self):
        return self.data.shape[1]

    @property
    def n_cells(self):
        return self.pattern.n

    @property
    def n_wells(self):
        return len(self.well_diag)

    @property
    def n_cell_unknowns(self):
        return self.pattern.n * self.block_size

    @property
    def shape(self):
        n = self.n_cell_unknowns + self.n_wells
        return (n, n)

    def copy(self):
        return BlockMatrix(
            self.pattern,
            self.data.copy(),
            self.perf_cell,
            self.perf_well,
            self.border_col.copy(),
            self.border_row.copy(),
            self.well_diag.copy(),
        )

    def cell_matvec(self, x_cells, pool=SERIAL, out=None):
        """Product of the cell-cell part with a cell vector."""
        pat = self.pattern
        y = np.empty_like(x_cells) if out is None else out
        pool.map_ranges(
            lambda lo, hi: kernels.bsr_matvec_rows(pat.indptr, pat.indices, self.data, x_cells, y, lo, hi),
            pat.n,
            min_chunk=256,
        )
        return y

    def matvec(self, x, pool=SERIAL):
        nc = self.n_cell_unknowns
        b = self.block_size
        x = np.asarray(x, dtype=float)
        y = np.empty_like(x)
        self.cell_matvec(np.ascontiguousarray(x[:nc]), pool, out=y[:nc])
        if self.n_wells:
            xw = x[nc:]
            yc = y[:nc].reshape(-1, b)
            for m in range(len(self.perf_cell)):
                yc[self.perf_cell[m]] += self.border_col[m] * xw[self.perf_well[m]]
            yw = self.well_diag * xw
            xc = x[:nc].reshape(-1, b)
            for m in range(len(self.perf_cell)):
                yw[self.perf_well[m]] += self.border_row[m] @ xc[self.perf_cell[m]]
            y[nc:] = yw
        return y

    __matmul__ = matvec

    def to_dense(self):
        n = self.shape[0]
        b = self.block_size
        nc = self.n_cell_unknowns
        A = np.zeros((n, n))
        pat = self.pattern
        for i in range(pat.n):
            for p in range(pat.indptr[i], pat.indptr[i + 1]):
                j = pat.indices[p]
                A[i * b : (i + 1) * b, j * b : (j + 1) * b] += self.data[p]
        for m in range(len(self.perf_cell)):
            c, w = self.perf_cell[m], self.perf_well[m]
            A[c * b : (c + 1) * b, nc + w] += self.border_col[m]
            A[nc + w, c * b : (c + 1) * b] += self.border_row[m]
        A[nc + np.arange(self.n_wells), nc + np.arange(self.n_wells)] += self.well_diag
        return A

    def to_scipy(self):
        import scipy.sparse as sp

        return sp.csr_matrix(self.to_dense())

    def dump(self, path, rhs=None):
        """Write the system as text: header then one ``row col value`` line per nonzero."""
        A = self.to_dense()
        rows, cols = np.nonzero(A)
        with open(path, "w") as fh:
            fh.write(f"# n {A.shape[0]} block_size {self.block_size} n_cells {self.n_cells} n_wells {self.n_wells}\n")
            for r, c in zip(rows, cols):
                fh.write(f"{r} {c} {float(A[r, c])!r}\n")
            if rhs is not None:
                fh.write("# rhs\n")
                for v in rhs:
                    fh.write(f"{float(v)!r}\n")


def load_dump(path):
    """Read a system written by :meth:`BlockMatrix.dump` into dense (A, b)."""
    with open(path) as fh:
        header = fh.readline().split()
        n = int(header[2])
        A = np.zeros((n, n))
        rhs = []
        in_rhs = False
        for line in fh:
            if line.startswith("# rhs"):
                in_rhs = True
                continue
            if in_rhs:
                rhs.append(float(line))
            else:
                r, c, v = line.split()
                A[int(r), int(c)] = float(v)
    return A, (np.array(rhs) if rhs else None)
