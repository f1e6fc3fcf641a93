"""Fluid and rock property models in field units.

All evaluators are vectorized over numpy arrays and return the value together
with its analytic derivative, which the Jacobian assembly consumes directly.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

BBL_TO_FT3 = 5.614583


@dataclass(frozen=True)
class UnitConstants:
    """Field-unit conversion constants.

    darcy_const turns mD*ft (or mD*ft^2/ft) into bbl/(day*cp*psi);
    grav_const turns a density in lbm/ft^3 into a gradient in psi/ft.
    """

    darcy_const: float = 0.001127
    grav_const: float = 1.0 / 144.0

    def __post_init__(self):
        if not (self.darcy_const > 0 and self.grav_const > 0):
            raise ValueError("unit constants must be positive")


UNITS = UnitConstants()


def _check_pvt(name, B_ref, c, mu, rho_sc):
    if not B_ref > 0:
        raise ValueError(f"{name}: formation volume factor must be positive")
    if not c >= 0:
        raise ValueError(f"{name}: compressibility must be non-negative")
    if not mu > 0:
        raise ValueError(f"{name}: viscosity must be positive")
    if not rho_sc > 0:
        raise ValueError(f"{name}: stock-tank density must be positive")


@dataclass(frozen=True)
class PvtOil:
    p_ref: float
    B_ref: float
    c_o: float
    mu_o: float
    rho_sc: float
    linear: bool = False  # B = B_ref*(1 - c*(p - p_ref)) instead of the exponential form

    def __post_init__(self):
        _check_pvt("oil", self.B_ref, self.c_o, self.mu_o, self.rho_sc)


@dataclass(frozen=True)
class PvtWater:
    p_ref: float
    B_ref: float
    c_w: float
    mu_w: float
    rho_sc: float
    linear: bool = False

    def __post_init__(self):
        _check_pvt("water", self.B_ref, self.c_w, self.mu_w, self.rho_sc)


@dataclass(frozen=True)
class RockCompressibility:
    phi_ref: float
    c_r: float
    p_ref: float

    def __post_init__(self):
        phi = np.asarray(self.phi_ref, dtype=float)
        if np.any(phi <= 0) or np.any(phi >= 1):
            raise ValueError("reference porosity must lie in (0, 1)")
        if not self.c_r >= 0:
            raise ValueError("rock compressibility must be non-negative")


def _density(p, p_ref, B_ref, c, rho_sc, linear):
    p = np.asarray(p, dtype=float)
    if linear:
        B = B_ref * (1.0 - c * (p - p_ref))
        rho = rho_sc / B
        drho = rho_sc * B_ref * c / B**2
    else:
        # rho = rho_sc / (B_ref * exp(-c (p - p_ref)))
        rho = (rho_sc / B_ref) * np.exp(c * (p - p_ref))
        drho = rho * c
    return rho, drho


def oil_density(p, pvt: PvtOil):
    """Oil density (lbm/ft^3) and its pressure derivative."""
    return _density(p, pvt.p_ref, pvt.B_ref, pvt.c_o, pvt.rho_sc, pvt.linear)


def water_density(p, pvt: PvtWater):
    """Water density (lbm/ft^3) and its pressure derivative."""
    return _density(p, pvt.p_ref, pvt.B_ref, pvt.c_w, pvt.rho_sc, pvt.linear)


def porosity(p, rock: RockCompressibility, diagnostics: Counter | None = None):
    """Linear rock compaction ``phi_ref*(1 + c_r*(p - p_ref))`` clamped to (0, 1].

    Clamped entries get a zero derivative and are tallied under
    ``"porosity_clamped"`` when a diagnostics counter is supplied.
    """
    p = np.asarray(p, dtype=float)
    phi = rock.phi_ref * (1.0 + rock.c_r * (p - rock.p_ref))
    dphi = np.broadcast_to(np.asarray(rock.phi_ref * rock.c_r, dtype=float), phi.shape).copy()
    low = phi <= 0.0
    high = phi > 1.0
    clamped = low | high
    if np.any(clamped):
        phi = np.where(low, 1e-12, np.where(high, 1.0, phi))
        dphi = np.where(clamped, 0.0, dphi)
        if diagnostics is not None:
            diagnostics["porosity_clamped"] += int(np.count_nonzero(clamped))
    return phi, dphi


@dataclass(frozen=True)
class SatFuncTable:
    """Water-oil saturation function table: rows of (s_w, k_rw, k_ro, p_cow)."""

    sw: np.ndarray
    krw: np.ndarray
    kro: np.ndarray
    pcow: np.ndarray
    name: str = field(default="", compare=False)

    def __post_init__(self):
        arrays = [np.asarray(a, dtype=float) for a in (self.sw, self.krw, self.kro, self.pcow)]
        for attr, a in zip(("sw", "krw", "kro", "pcow"), arrays):
            a.setflags(write=False)
            object.__setattr__(self, attr, a)
        sw, krw, kro, _ = arrays
        if sw.ndim != 1 or len(sw) < 2 or any(len(a) != len(sw) for a in arrays):
            raise ValueError("saturation table needs at least two rows of four columns")
        if np.any(np.diff(sw) <= 0):
            raise ValueError("saturation table: s_w must be strictly increasing")
        if np.any(np.diff(krw) < 0):
            raise ValueError("saturation table: k_rw must be non-decreasing")
        if np.any(np.diff(kro) > 0):
            raise ValueError("saturation table: k_ro must be non-increasing")
        for a in (krw, kro):
            if np.any(a < 0) or np.any(a > 1):
                raise ValueError("saturation table: relative permeabilities must lie in [0, 1]")

    @classmethod
    def from_rows(cls, rows, name=""):
        rows = np.asarray(rows, dtype=float)
        if rows.ndim != 2 or rows.shape[1] != 4:
            raise ValueError("saturation table rows must have four columns")
        return cls(rows[:, 0], rows[:, 1], rows[:, 2], rows[:, 3], name=name)

    @property
    def rows(self):
        return np.column_stack([self.sw, self.krw, self.kro, self.pcow])


def corey_table(swc, sor, nw=2.0, no=2.0, krw_max=1.0, kro_max=1.0, pc_max=0.0, n_rows=21, name=""):
    """Sample two-phase Corey curves into a table.

    Capillary pressure falls linearly in normalized saturation from pc_max at
    s_w = swc to zero at s_w = 1 - sor.  The table spans s_w in [0, 1].
    """
    if not 0 <= swc < 1 - sor <= 1:
        raise ValueError("Corey endpoints must satisfy 0 <= swc < 1 - sor <= 1")
    inner = np.linspace(swc, 1.0 - sor, n_rows)
    sw = inner
    if inner[0] > 0.0:
        sw = np.concatenate([[0.0], sw])
    if inner[-1] < 1.0:
        sw = np.concatenate([sw, [1.0]])
    se = np.clip((sw - swc) / (1.0 - sor - swc), 0.0, 1.0)
    krw = krw_max * se**nw
    kro = kro_max * (1.0 - se) ** no
    pc = pc_max * (1.0 - se)
    return SatFuncTable(sw, krw, kro, pc, name=name)


def eval_satfunc(s_w, tab: SatFuncTable):
    """Piecewise-linear lookup of (k_rw, k_ro, p_cow) and their s_w-slopes.

    At an interior node the slope of the segment to its left is returned.
    Outside the table, values clamp to the end rows with zero slope.
    """
    s = np.asarray(s_w, dtype=float)
    sw = tab.sw
    seg = np.clip(np.searchsorted(sw, s, side="left"), 1, len(sw) - 1)
    lo = seg - 1
    width = sw[seg] - sw[lo]
    t = np.clip((s - sw[lo]) / width, 0.0, 1.0)
    outside = (s < sw[0]) | (s > sw[-1])
    out = []
    for col in (tab.krw, tab.kro, tab.pcow):
        a, b = col[lo], col[seg]
        val = a + t * (b - a)
        slope = np.where(outside, 0.0, (b - a) / width)
        out.append(val)
        out.append(slope)
    krw, dkrw, kro, dkro, pc, dpc = out
    return krw, kro, pc, dkrw, dkro, dpc
