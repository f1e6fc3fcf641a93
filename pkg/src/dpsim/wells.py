"""Sink-source well model: well indices, perforation rates and control equations.

Rates follow the cell-source sign convention: positive into the reservoir
(injection), negative out of it (production).  Mass rates carry the same
units as the flux terms, bbl/day * lbm/ft^3; dividing by a stock-tank
density gives STB/day.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .props import UNITS

INJECTOR = "injector"
PRODUCER = "producer"
RATE = "rate"
BHP = "bhp"


class WellGeometryError(ValueError):
    pass


@dataclass
class Perforation:
    cell: int
    well_index: float | None = None  # mD*ft; when set, geometry is ignored
    k_h: float | str | None = None  # mD*ft or "AUTO" (k*dz of the perforated cell)
    r_w: float = 0.25
    skin: float = 0.0
    w_frac: float = 1.0
    w_g: float = 1.0
    radius_model: str = "peaceman"  # or "circle"
    direction: str = "z"

    def __post_init__(self):
        if self.well_index is None:
            if not self.r_w > 0:
                raise WellGeometryError("wellbore radius must be positive")
            if not 0 < self.w_frac <= 1:
                raise WellGeometryError("well fraction must lie in (0, 1]")
        elif not self.well_index >= 0:
            raise WellGeometryError("well index must be non-negative")


@dataclass
class WellSpec:
    name: str
    kind: str
    perforations: list[Perforation]
    max_rate: float
    bhp_limit: float
    ref_depth: float | None = None
    control: str = RATE  # initial active constraint

    def __post_init__(self):
        self.kind = self.kind.lower()
        self.control = self.control.lower()
        if self.kind not in (INJECTOR, PRODUCER):
            raise ValueError(f"well {self.name}: kind must be injector or producer")
        if self.control not in (RATE, BHP):
            raise ValueError(f"well {self.name}: control must be rate or bhp")
        if not self.perforations:
            raise ValueError(f"well {self.name}: at least one perforation required")
        if not self.max_rate >= 0:
            raise ValueError(f"well {self.name}: rate limit must be non-negative")

    @property
    def is_injector(self):
        return self.kind == INJECTOR

    @property
    def rate_target(self):
        """Signed rate target: + water injection, - oil production (STB/day)."""
        return self.max_rate if self.is_injector else -self.max_rate


@dataclass
class WellState:
    p_bh: float
    control: str = RATE
    oil_rate: float = 0.0  # surface, signed
    water_rate: float = 0.0
    perf_oil: np.ndarray = field(default_factory=lambda: np.zeros(0))
    perf_water: np.ndarray = field(default_factory=lambda: np.zeros(0))


def effective_radius_circle(w_g, area, w_frac):
    """r_e = w_g*sqrt(A/(pi*w_frac))."""
    return w_g * math.sqrt(area / (math.pi * w_frac))


_PEACEMAN_AXES = {"z": (0, 1), "y": (0, 2), "x": (1, 2)}


def effective_radius_peaceman(D, k, direction="z"):
    """Peaceman equivalent radius for an anisotropic block.

    ``D`` and ``k`` are (x, y, z) block sizes and permeabilities.  The two
    axes normal to the well enter; their permeabilities must be positive.
    """
    a, b = _PEACEMAN_AXES[direction]
    ka, kb = float(k[a]), float(k[b])
    if ka <= 0 or kb <= 0:
        raise WellGeometryError("anisotropy ratio undefined: zero permeability normal to the well")
    Da, Db = float(D[a]), float(D[b])
    rba = kb / ka
    rab = ka / kb
    num = math.sqrt(Da**2 * math.sqrt(rba) + Db**2 * math.sqrt(rab))
    return 0.28 * num / (rba**0.25 + rab**0.25)


def well_index(k_h, w_frac, r_e, r_w, skin=0.0):
    """W = 2*pi*k_h*w_frac/(ln(r_e/r_w) + skin), in mD*ft."""
    denom = math.log(r_e / r_w) + skin
    if not denom > 0:
        raise WellGeometryError("non-physical well geometry: ln(r_e/r_w) + skin <= 0")
    return 2.0 * math.pi * k_h * w_frac / denom


def resolve_well_index(perf: Perforation, grid) -> float:
    """Well index of a perforation in mD*ft, using the fracture permeability."""
    if perf.well_index is not None:
        return float(perf.well_index)
    c = perf.cell
    D = (grid.dx[c], grid.dy[c], grid.dz[c])
    k = grid.k_fracture[c]
    axis = "xyz".index(perf.direction)
    a, b = _PEACEMAN_AXES[perf.direction]
    if perf.radius_model == "circle":
        r_e = effective_radius_circle(perf.w_g, D[a] * D[b], perf.w_frac)
    else:
        r_e = effective_radius_peaceman(D, k, perf.direction)
    if perf.k_h is None:
        raise WellGeometryError("k_h is required when WI is not given (use AUTO for k*h)")
    if isinstance(perf.k_h, str):
        # AUTO: geometric mean of the normal permeabilities times the length along the well
        k_h = math.sqrt(k[a] * k[b]) * D[axis]
    else:
        k_h = float(perf.k_h)
    return well_index(k_h, perf.w_frac, r_e, perf.r_w, perf.skin)


def perforation_pressure(p_bh, ref_depth, perf_depth, rho_mix, grav_const=UNITS.grav_const):
    """Hydrostatic wellbore correction from the reference depth to a perforation."""
    return p_bh + rho_mix * grav_const * (np.asarray(perf_depth) - ref_depth)


def perforation_rate(wi, p_cell, p_perf, mob, inj_mob=None, darcy_const=UNITS.darcy_const):
    """Mass rate of one phase through perforations, positive into the cell.

    ``mob`` is the cell mobility-density triple (value, d/dp, d/ds) in
    lbm/(ft^3*cp).  ``inj_mob`` is the triple used where the wellbore pushes
    fluid into the cell (p_perf > p_cell) for an injector; ``None`` keeps the
    cell mobility in both directions.

    Returns (q, dq/dp_cell, dq/ds_cell, dq/dp_perf).
    """
    wi = np.asarray(wi, dtype=float)
    dp = np.asarray(p_perf, dtype=float) - np.asarray(p_cell, dtype=float)
    lam, dlam_p, dlam_s = (np.asarray(m, dtype=float) for m in mob)
    if inj_mob is not None:
        inflow = dp > 0
        lam = np.where(inflow, inj_mob[0], lam)
        dlam_p = np.where(inflow, inj_mob[1], dlam_p)
        dlam_s = np.where(inflow, inj_mob[2], dlam_s)
    c = darcy_const * wi
    q = c * lam * dp
    return q, c * (dlam_p * dp - lam), c * dlam_s * dp, c * lam


def well_equation(well: WellSpec, control, p_bh, q_oil, q_water):
    """Residual of the active well constraint.

    ``q_oil``/``q_water`` are total signed surface rates (STB/day).  For rate
    control the governed phase is water for injectors and oil for producers.
    Returns (residual, d/dq_oil, d/dq_water, d/dp_bh) with the rate
    derivatives meant to be chained through the perforation rates.
    """
    if control == BHP:
        return p_bh - well.bhp_limit, 0.0, 0.0, 1.0
    if well.is_injector:
        return q_water - well.rate_target, 0.0, 1.0, 0.0
    return q_oil - well.rate_target, 1.0, 0.0, 0.0


def constraint_violation(well: WellSpec, control, p_bh, q_oil, q_water, tol=1e-6):
    """Return the constraint to switch to, or None if the inactive limit holds."""
    if control == RATE:
        if well.is_injector and p_bh > well.bhp_limit + tol * max(1.0, abs(well.bhp_limit)):
            return BHP
        if not well.is_injector and p_bh < well.bhp_limit - tol * max(1.0, abs(well.bhp_limit)):
            return BHP
        return None
    rate = q_water if well.is_injector else -q_oil
    if rate > well.max_rate * (1.0 + tol) + tol:
        return RATE
    return None
