"""Structured Cartesian dual-continuum grid.

Cells use natural ordering ``i + nx*(j + ny*k)`` (0-based, k pointing down).
Only the fracture continuum has cell-to-cell connections; each matrix cell
talks to its co-located fracture cell through the shape factor.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .props import BBL_TO_FT3, UNITS, RockCompressibility

AXES = ("x", "y", "z")


class GridError(ValueError):
    """Invalid grid geometry or rock input; carries an optional deck location."""

    def __init__(self, message, location=None):
        self.location = location
        if location:
            message = f"{location}: {message}"
        super().__init__(message)


def _axis_sizes(value, n, name, location=None):
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.size == 1:
        arr = np.full(n, arr.item())
    if arr.size != n:
        raise GridError(f"{name} needs 1 or {n} values, got {arr.size}", location)
    if np.any(~np.isfinite(arr)) or np.any(arr <= 0):
        raise GridError(f"{name} sizes must be positive", location)
    return arr


@dataclass
class GridDims:
    nx: int
    ny: int
    nz: int
    dx: float | np.ndarray
    dy: float | np.ndarray
    dz: float | np.ndarray
    top_depth: float = 0.0
    # True: top_depth is the centre of layer 1; False: it is the top face.
    top_is_center: bool = False
    location: str | None = None

    def __post_init__(self):
        for name in ("nx", "ny", "nz"):
            if int(getattr(self, name)) < 1:
                raise GridError(f"{name} must be >= 1", self.location)
        self.dx = _axis_sizes(self.dx, self.nx, "DX", self.location)
        self.dy = _axis_sizes(self.dy, self.ny, "DY", self.location)
        self.dz = _axis_sizes(self.dz, self.nz, "DZ", self.location)

    @property
    def shape(self):
        return (self.nx, self.ny, self.nz)

    @property
    def n_cells(self):
        return self.nx * self.ny * self.nz


@dataclass
class ContinuumProps:
    """Rock data for one continuum; permeabilities may be scalars or per-cell arrays."""

    perm_x: float | np.ndarray
    perm_y: float | np.ndarray
    perm_z: float | np.ndarray
    rock: RockCompressibility

    def perms(self, n):
        out = []
        for name, k in (("perm_x", self.perm_x), ("perm_y", self.perm_y), ("perm_z", self.perm_z)):
            arr = np.broadcast_to(np.asarray(k, dtype=float), (n,)).copy()
            if np.any(arr < 0):
                raise GridError(f"{name} must be non-negative")
            out.append(arr)
        return np.stack(out, axis=1)


def shape_factor(spacing, model="kazemi", n_sets=3, length=None):
    """Matrix-fracture shape factor sigma in 1/ft^2.

    ``kazemi``: 4*(1/Lx^2 + 1/Ly^2 + 1/Lz^2); an infinite spacing drops that axis.
    ``warren-root``: 4*n*(n+2)/L^2 with n fracture sets and representative
    spacing L (defaults to the mean of the finite spacings).
    """
    L = np.asarray(spacing, dtype=float)
    if np.any(~(L > 0)):
        raise GridError("fracture spacing must be positive")
    model = model.lower().replace("_", "-")
    if model == "kazemi":
        return 4.0 * np.sum(1.0 / L**2, axis=-1)
    if model in ("warren-root", "warrenroot"):
        if length is None:
            finite = np.where(np.isfinite(L), L, np.nan)
            length = np.nanmean(finite, axis=-1)
        length = np.asarray(length, dtype=float)
        if np.any(~(length > 0)):
            raise GridError("Warren-Root spacing must be positive")
        return 4.0 * n_sets * (n_sets + 2) / length**2
    raise GridError(f"unknown shape factor model {model!r}")


def face_transmissibility(k_i, k_j, half_i, half_j, area, darcy_const=UNITS.darcy_const):
    """Two-point transmissibility with harmonic permeability averaging.

    ``half_i``/``half_j`` are the full cell lengths along the axis (each
    contributes half).  Returns 0 for a face with a zero permeability on
    either side.  Units: bbl/(day*cp*psi) when inputs are mD and ft.
    """
    k_i = np.asarray(k_i, dtype=float)
    k_j = np.asarray(k_j, dtype=float)
    sealed = (k_i <= 0) | (k_j <= 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        resist = half_i / (2.0 * k_i * area) + half_j / (2.0 * k_j * area)
        t = np.where(sealed, 0.0, darcy_const / resist)
    return t if t.ndim else float(t)


@dataclass(eq=False)
class Grid:
    dims: GridDims
    matrix: ContinuumProps
    fracture: ContinuumProps
    # per-cell geometry
    dx: np.ndarray
    dy: np.ndarray
    dz: np.ndarray
    depth: np.ndarray
    # per-cell permeabilities (n, 3)
    k_matrix: np.ndarray
    k_fracture: np.ndarray
    # connection list (fracture continuum only)
    conn_i: np.ndarray
    conn_j: np.ndarray
    conn_axis: np.ndarray
    trans: np.ndarray
    # matrix-fracture exchange
    sigma: np.ndarray
    k_transfer: np.ndarray
    shape_model: str = "kazemi"
    # (n, 6) connection index per cell face slot (-x,+x,-y,+y,-z,+z), -1 if none
    cell_conn: np.ndarray = field(repr=False, default=None)
    cell_conn_sign: np.ndarray = field(repr=False, default=None)

    @property
    def n_cells(self):
        return self.dims.n_cells

    @property
    def n_connections(self):
        return len(self.conn_i)

    @property
    def bulk_volume(self):
        """Cell bulk volume in ft^3."""
        return self.dx * self.dy * self.dz

    @property
    def bulk_volume_bbl(self):
        return self.bulk_volume / BBL_TO_FT3

    @property
    def transfer_trans(self):
        """darcy_const * sigma * k_m * V, in bbl/(day*cp*psi)."""
        return UNITS.darcy_const * self.sigma * self.k_transfer * self.bulk_volume

    def index(self, i, j, k):
        nx, ny, _ = self.dims.shape
        return i + nx * (j + ny * k)

    def ijk(self, idx):
        nx, ny, _ = self.dims.shape
        return idx % nx, (idx // nx) % ny, idx // (nx * ny)

    def connections_of(self, cell):
        slots = self.cell_conn[cell]
        return slots[slots >= 0]


def build_grid(
    dims: GridDims,
    matrix: ContinuumProps,
    fracture: ContinuumProps,
    frac_spacing=None,
    shape_model="kazemi",
    n_sets=3,
    spacing_length=None,
    sigma=None,
    transfer_perm="x",
) -> Grid:
    """Build geometry, connections and transfer coefficients.

    ``frac_spacing`` is an (n, 3) or (3,) array of matrix block sizes and
    defaults to the cell dimensions.  ``sigma`` overrides the shape factor
    (scalar or per-cell).  ``transfer_perm`` picks the matrix permeability
    multiplying sigma: an axis name or ``arith``/``geom``/``harm``.
    """
    nx, ny, nz = dims.shape
    n = dims.n_cells
    idx = np.arange(n)
    ii, jj, kk = idx % nx, (idx // nx) % ny, idx // (nx * ny)
    dx, dy, dz = dims.dx[ii], dims.dy[jj], dims.dz[kk]

    z_top = np.concatenate([[0.0], np.cumsum(dims.dz)[:-1]])
    layer_center = z_top + dims.dz / 2.0
    if dims.top_is_center:
        layer_center = layer_center - dims.dz[0] / 2.0
    depth = dims.top_depth + layer_center[kk]

    km = matrix.perms(n)
    kf = fracture.perms(n)

    conn_i, conn_j, conn_axis, trans = [], [], [], []
    cell_conn = -np.ones((n, 6), dtype=np.int64)
    cell_sign = np.zeros((n, 6), dtype=np.int8)
    offset = 0
    for axis, (step, mask, length, area) in enumerate(
        (
            (1, ii < nx - 1, dx, dy * dz),
            (nx, jj < ny - 1, dy, dx * dz),
            (nx * ny, kk < nz - 1, dz, dx * dy),
        )
    ):
        ci = idx[mask]
        cj = ci + step
        t = face_transmissibility(kf[ci, axis], kf[cj, axis], length[ci], length[cj], area[ci])
        t = np.atleast_1d(t)
        m = len(ci)
        ids = offset + np.arange(m)
        # cell i sees the connection on its + face, cell j on its - face
        cell_conn[ci, 2 * axis + 1] = ids
        cell_sign[ci, 2 * axis + 1] = 1
        cell_conn[cj, 2 * axis] = ids
        cell_sign[cj, 2 * axis] = -1
        conn_i.append(ci)
        conn_j.append(cj)
        conn_axis.append(np.full(m, axis, dtype=np.int8))
        trans.append(t)
        offset += m

    if sigma is None:
        if frac_spacing is None:
            spacing = np.column_stack([dx, dy, dz])
        else:
            spacing = np.broadcast_to(np.asarray(frac_spacing, dtype=float), (n, 3))
        sig = shape_factor(spacing, shape_model, n_sets=n_sets, length=spacing_length)
    else:
        sig = np.broadcast_to(np.asarray(sigma, dtype=float), (n,)).copy()
        if np.any(sig < 0):
            raise GridError("shape factor must be non-negative")
    sig = np.broadcast_to(sig, (n,)).astype(float)

    tp = transfer_perm.lower()
    if tp in AXES:
        k_tr = km[:, AXES.index(tp)].copy()
    elif tp == "arith":
        k_tr = km.mean(axis=1)
    elif tp == "geom":
        k_tr = np.cbrt(km.prod(axis=1))
    elif tp == "harm":
        with np.errstate(divide="ignore"):
            k_tr = np.where(np.all(km > 0, axis=1), 3.0 / np.sum(1.0 / km, axis=1), 0.0)
    else:
        raise GridError(f"unknown transfer permeability option {transfer_perm!r}")

    return Grid(
        dims=dims,
        matrix=matrix,
        fracture=fracture,
        dx=dx,
        dy=dy,
        dz=dz,
        depth=depth,
        k_matrix=km,
        k_fracture=kf,
        conn_i=np.concatenate(conn_i).astype(np.int64),
        conn_j=np.concatenate(conn_j).astype(np.int64),
        conn_axis=np.concatenate(conn_axis),
        trans=np.concatenate(trans).astype(float),
        sigma=sig,
        k_transfer=k_tr,
        shape_model=shape_model,
        cell_conn=cell_conn,
        cell_conn_sign=cell_sign,
    )
