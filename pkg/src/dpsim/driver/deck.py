"""Keyword-sectioned input deck.

A deck is plain text.  ``--`` or ``#`` start a comment.  A line holding only a
section name (GRID, MATRIX, FRACTURE, TRANSFER, PVT, SWFN, INIT, WELLS,
SCHEDULE, SOLVER, OUTPUT) opens that section; every other line is a keyword
followed by its values.  Numeric lists accept ``N*value`` repeats.  The full
schema is in docs/formats.md.
"""
from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..grid import ContinuumProps, GridDims, GridError
from ..props import PvtOil, PvtWater, RockCompressibility, SatFuncTable, corey_table
from ..wells import BHP, INJECTOR, PRODUCER, RATE, Perforation, WellGeometryError, WellSpec

log = logging.getLogger(__name__)

SECTIONS = ("GRID", "MATRIX", "FRACTURE", "TRANSFER", "PVT", "SWFN", "INIT", "WELLS", "SCHEDULE", "SOLVER",
            "OUTPUT")
REQUIRED = ("GRID", "MATRIX", "FRACTURE", "PVT", "INIT", "WELLS", "SCHEDULE")


class DeckError(ValueError):
    def __init__(self, message, line=None, col=None, path=None):
        self.line, self.col, self.path = line, col, path
        where = ""
        if line is not None:
            where = f"{path or '<deck>'}:{line}:{col or 1}: "
        super().__init__(where + message)


@dataclass
class Token:
    text: str
    line: int
    col: int


@dataclass
class Line:
    keyword: Token
    args: list[Token]

    @property
    def lineno(self):
        return self.keyword.line


@dataclass
class ScheduleEvent:
    time: float
    well: str
    key: str  # RATE_MAX, BHP_MIN, BHP_MAX or CONTROL
    value: object
    line: int = 0


@dataclass
class SolverSettings:
    dt_init: float = 1.0
    dt_min: float = 0.01
    dt_max: float = 50.0
    grow: float = 2.0
    cut: float = 0.5
    max_cuts: int = 10
    newton_tol: float = 1e-4
    newton_max_iters: int = 15
    forcing: str = "ew3"
    forcing_constant: float = 1e-8
    gamma: float = 0.9
    beta: float = 2.0
    eta_min: float = 1e-4
    eta_max: float = 0.9
    eta_initial: float = 0.1
    dp_max: float = 500.0
    ds_max: float = 0.2
    mb_tol: float = 1e-7
    linear_restart: int = 30
    linear_max_iters: int = 200
    precond: str = "cpr"
    pressure_set: str = "both"  # both | fracture
    pressure_solver: str = "cg"
    max_switches: int = 3
    single_porosity: bool = False


@dataclass
class SimDeck:
    dims: GridDims
    matrix: ContinuumProps
    fracture: ContinuumProps
    oil: PvtOil
    water: PvtWater
    table_matrix: SatFuncTable
    table_fracture: SatFuncTable
    wells: list[WellSpec]
    init: dict  # pf, pm, swf, swm, equil
    t_end: float
    report_times: list[float] = field(default_factory=list)
    events: list[ScheduleEvent] = field(default_factory=list)
    transfer: dict = field(default_factory=dict)  # build_grid keyword arguments
    gravity: bool = True
    solver: SolverSettings = field(default_factory=SolverSettings)
    snapshot_every: int = 0
    title: str = ""
    path: str | None = None


_NUM = re.compile(r"^(?:(\d+)\*)?([-+]?(?:\d+\.?\d*|\.\d+)(?:[eEdD][-+]?\d+)?)$")


def tokenize(text):
    lines = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        cut = len(raw)
        for marker in ("--", "#"):
            k = raw.find(marker)
            if k >= 0:
                cut = min(cut, k)
        toks = [Token(m.group(), lineno, m.start() + 1) for m in re.finditer(r"\S+", raw[:cut])]
        if toks:
            lines.append(Line(toks[0], toks[1:]))
    return lines


class _Parser:
    def __init__(self, path=None):
        self.path = path

    def error(self, msg, tok: Token | None = None):
        if tok is None:
            return DeckError(msg, path=self.path)
        return DeckError(msg, tok.line, tok.col, self.path)

    def number(self, tok: Token):
        m = _NUM.match(tok.text)
        if not m or m.group(1):
            raise self.error(f"expected a number, got {tok.text!r}", tok)
        return float(m.group(2).replace("d", "e").replace("D", "e"))

    def numbers(self, line: Line, count=None, at_least=1):
        out = []
        for tok in line.args:
            m = _NUM.match(tok.text)
            if not m:
                raise self.error(f"expected a number, got {tok.text!r}", tok)
            rep = int(m.group(1)) if m.group(1) else 1
            out.extend([float(m.group(2).replace("d", "e").replace("D", "e"))] * rep)
        if count is not None and len(out) != count:
            raise self.error(f"{line.keyword.text} expects {count} value(s), got {len(out)}", line.keyword)
        if len(out) < at_least:
            raise self.error(f"{line.keyword.text} needs a value", line.keyword)
        return out

    def pairs(self, line: Line, start=0):
        """KEY value pairs after position ``start``; returns {KEY: Token}."""
        args = line.args[start:]
        out = {}
        k = 0
        while k < len(args):
            key = args[k]
            if k + 1 >= len(args):
                raise self.error(f"{key.text} needs a value", key)
            out[key.text.upper()] = (key, args[k + 1])
            k += 2
        return out


def _sizes(values, n, name, parser, tok):
    if len(values) not in (1, n):
        raise parser.error(f"{name} needs 1 or {n} values, got {len(values)}", tok)
    return values if len(values) > 1 else values[0]


def parse_deck(path) -> SimDeck:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DeckError(f"cannot read deck: {exc}") from exc
    return parse_deck_text(text, str(path))


def parse_deck_text(text, path=None) -> SimDeck:
    p = _Parser(path)
    sections: dict[str, list] = {}
    current = None
    title = ""
    for line in tokenize(text):
        head = line.keyword.text.upper()
        if head in SECTIONS and not line.args:
            current = head
            sections.setdefault(head, [])
            if head == "SWFN":
                raise p.error("SWFN needs MATRIX or FRACTURE", line.keyword)
            continue
        if head == "SWFN" and len(line.args) == 1:
            which = line.args[0].text.upper()
            if which not in ("MATRIX", "FRACTURE"):
                raise p.error("SWFN needs MATRIX or FRACTURE", line.args[0])
            current = "SWFN_" + which
            sections.setdefault(current, [])
            continue
        if head == "TITLE":
            title = " ".join(t.text for t in line.args)
            continue
        if current is None:
            raise p.error(f"keyword {line.keyword.text} outside of a section", line.keyword)
        sections[current].append(line)

    for name in REQUIRED:
        if name not in sections:
            raise p.error(f"missing {name} section")

    dims = _grid(p, sections["GRID"])
    n = dims.n_cells
    matrix = _continuum(p, sections["MATRIX"], n, "MATRIX")
    fracture = _continuum(p, sections["FRACTURE"], n, "FRACTURE")
    oil, water, gravity = _pvt(p, sections["PVT"])
    tables = {}
    for which in ("MATRIX", "FRACTURE"):
        key = "SWFN_" + which
        if key not in sections:
            raise p.error(f"missing SWFN {which} section")
        tables[which] = _swfn(p, sections[key], which.lower())
    init = _init(p, sections["INIT"])
    wells = _wells(p, sections["WELLS"], dims)
    t_end, reports, events = _schedule(p, sections["SCHEDULE"], wells)
    transfer = _transfer(p, sections.get("TRANSFER", []))
    solver = _solver(p, sections.get("SOLVER", []))
    snapshot_every = 0
    for line in sections.get("OUTPUT", []):
        key = line.keyword.text.upper()
        if key == "SNAPSHOT_EVERY":
            snapshot_every = int(p.numbers(line, 1)[0])
        else:
            raise p.error(f"unknown keyword {line.keyword.text} in OUTPUT", line.keyword)
    return SimDeck(dims, matrix, fracture, oil, water, tables["MATRIX"], tables["FRACTURE"], wells, init, t_end,
                   reports, events, transfer, gravity, solver, snapshot_every, title, path)


def _grid(p, lines):
    vals = {}
    loc = {}
    for line in lines:
        key = line.keyword.text.upper()
        loc[key] = line.keyword
        if key == "DIMENS":
            nums = p.numbers(line, 3)
            if any(v != int(v) or v < 1 for v in nums):
                raise p.error("DIMENS needs three positive integers", line.keyword)
            vals[key] = tuple(int(v) for v in nums)
        elif key in ("DX", "DY", "DZ"):
            vals[key] = p.numbers(line)
        elif key == "DEPTH":
            if not line.args:
                raise p.error("DEPTH needs a value", line.keyword)
            vals[key] = p.number(line.args[0])
            mode = line.args[1].text.upper() if len(line.args) > 1 else "TOP"
            if mode not in ("TOP", "CENTER") or len(line.args) > 2:
                raise p.error("DEPTH mode must be TOP or CENTER", line.args[-1])
            vals["DEPTH_MODE"] = mode
        else:
            raise p.error(f"unknown keyword {line.keyword.text} in GRID", line.keyword)
    for key in ("DIMENS", "DX", "DY", "DZ"):
        if key not in vals:
            raise p.error(f"GRID section lacks {key}")
    nx, ny, nz = vals["DIMENS"]
    try:
        return GridDims(nx, ny, nz,
                        _sizes(vals["DX"], nx, "DX", p, loc["DX"]),
                        _sizes(vals["DY"], ny, "DY", p, loc["DY"]),
                        _sizes(vals["DZ"], nz, "DZ", p, loc["DZ"]),
                        top_depth=vals.get("DEPTH", 0.0),
                        top_is_center=vals.get("DEPTH_MODE", "TOP") == "CENTER")
    except GridError as exc:
        raise p.error(str(exc), loc["DIMENS"]) from exc


def _array(p, line, n):
    v = p.numbers(line)
    if len(v) not in (1, n):
        raise p.error(f"{line.keyword.text} needs 1 or {n} values, got {len(v)}", line.keyword)
    return v[0] if len(v) == 1 else np.array(v)


def _continuum(p, lines, n, name):
    vals = {}
    for line in lines:
        key = line.keyword.text.upper()
        if key == "PERM":
            nums = p.numbers(line)
            if len(nums) == 1:
                nums = nums * 3
            if len(nums) != 3:
                raise p.error("PERM takes 1 or 3 values (kx ky kz)", line.keyword)
            vals["PERMX"], vals["PERMY"], vals["PERMZ"] = nums
        elif key in ("PERMX", "PERMY", "PERMZ", "PORO"):
            vals[key] = _array(p, line, n)
        elif key in ("CROCK", "PREF"):
            vals[key] = p.numbers(line, 1)[0]
        else:
            raise p.error(f"unknown keyword {line.keyword.text} in {name}", line.keyword)
    for key in ("PERMX", "PERMY", "PERMZ", "PORO"):
        if key not in vals:
            raise p.error(f"{name} section lacks {key}")
    for key, default in (("CROCK", 0.0), ("PREF", 14.7)):
        if key not in vals:
            log.info("%s: %s defaulted to %g", name, key, default)
            vals[key] = default
    try:
        rock = RockCompressibility(vals["PORO"], vals["CROCK"], vals["PREF"])
        return ContinuumProps(vals["PERMX"], vals["PERMY"], vals["PERMZ"], rock)
    except ValueError as exc:
        raise p.error(f"{name}: {exc}", lines[0].keyword if lines else None) from exc


_PVT_KEYS = {"PREF": "p_ref", "BREF": "B_ref", "COMP": "c", "VISC": "mu", "DENS": "rho_sc"}


def _pvt(p, lines):
    oil = water = None
    gravity = True
    for line in lines:
        key = line.keyword.text.upper()
        if key == "GRAVITY":
            if len(line.args) != 1 or line.args[0].text.upper() not in ("ON", "OFF"):
                raise p.error("GRAVITY takes ON or OFF", line.keyword)
            gravity = line.args[0].text.upper() == "ON"
            continue
        if key not in ("OIL", "WATER"):
            raise p.error(f"unknown keyword {line.keyword.text} in PVT", line.keyword)
        args = list(line.args)
        linear = False
        if args and args[-1].text.upper() == "LINEAR":
            linear = True
            args = args[:-1]
        kv = {"p_ref": 14.7, "B_ref": 1.0, "c": 0.0, "mu": 1.0, "rho_sc": None}
        for name, (ktok, vtok) in p.pairs(Line(line.keyword, args)).items():
            if name not in _PVT_KEYS:
                raise p.error(f"unknown PVT property {ktok.text}", ktok)
            kv[_PVT_KEYS[name]] = p.number(vtok)
        if kv["rho_sc"] is None:
            raise p.error(f"{key} needs DENS", line.keyword)
        try:
            if key == "OIL":
                oil = PvtOil(kv["p_ref"], kv["B_ref"], kv["c"], kv["mu"], kv["rho_sc"], linear)
            else:
                water = PvtWater(kv["p_ref"], kv["B_ref"], kv["c"], kv["mu"], kv["rho_sc"], linear)
        except ValueError as exc:
            raise p.error(str(exc), line.keyword) from exc
    if oil is None or water is None:
        raise p.error("PVT section needs both OIL and WATER lines")
    return oil, water, gravity


_COREY_KEYS = {"SWC": "swc", "SOR": "sor", "NW": "nw", "NO": "no", "KRWMAX": "krw_max", "KROMAX": "kro_max",
               "PCMAX": "pc_max", "ROWS": "n_rows"}


def _swfn(p, lines, name):
    if not lines:
        raise p.error(f"SWFN {name.upper()} is empty")
    if lines[0].keyword.text.upper() == "COREY":
        if len(lines) > 1:
            raise p.error("COREY must be the only entry of its SWFN section", lines[1].keyword)
        kv = {}
        for key, (ktok, vtok) in p.pairs(lines[0]).items():
            if key not in _COREY_KEYS:
                raise p.error(f"unknown COREY parameter {ktok.text}", ktok)
            kv[_COREY_KEYS[key]] = p.number(vtok)
        if "n_rows" in kv:
            kv["n_rows"] = int(kv["n_rows"])
        try:
            return corey_table(kv.pop("swc", 0.0), kv.pop("sor", 0.0), name=name, **kv)
        except ValueError as exc:
            raise p.error(str(exc), lines[0].keyword) from exc
    rows = []
    for line in lines:
        row = [p.number(line.keyword)] + [p.number(t) for t in line.args]
        if len(row) != 4:
            raise p.error("saturation table rows need sw krw kro pcow", line.keyword)
        rows.append(row)
    try:
        return SatFuncTable.from_rows(rows, name=name)
    except ValueError as exc:
        raise p.error(f"SWFN {name.upper()}: {exc}", lines[0].keyword) from exc


def _init(p, lines):
    out = {"equil": False}
    for line in lines:
        key = line.keyword.text.upper()
        if key == "EQUIL":
            if len(line.args) != 1 or line.args[0].text.upper() not in ("ON", "OFF"):
                raise p.error("EQUIL takes ON or OFF", line.keyword)
            out["equil"] = line.args[0].text.upper() == "ON"
            continue
        if key not in ("PF", "PM", "SWF", "SWM"):
            raise p.error(f"unknown keyword {line.keyword.text} in INIT", line.keyword)
        out[key.lower()] = p.numbers(line, 1)[0]
    for key in ("pf", "pm", "swf", "swm"):
        if key not in out:
            raise p.error(f"INIT section lacks {key.upper()}")
    return out


def _wells(p, lines, dims: GridDims):
    specs: dict[str, dict] = {}
    order = []
    for line in lines:
        key = line.keyword.text.upper()
        if key == "WELL":
            if len(line.args) < 2:
                raise p.error("WELL needs a name and INJECTOR or PRODUCER", line.keyword)
            name = line.args[0].text
            kind = line.args[1].text.lower()
            if kind not in (INJECTOR, PRODUCER):
                raise p.error("well type must be INJECTOR or PRODUCER", line.args[1])
            if name in specs:
                raise p.error(f"well {name} defined twice", line.args[0])
            w = {"name": name, "kind": kind, "perfs": [], "rate": None, "bhp": None, "control": RATE,
                 "ref_depth": None, "tok": line.keyword}
            for opt, (ktok, vtok) in p.pairs(line, 2).items():
                if opt == "RATE_MAX":
                    w["rate"] = p.number(vtok)
                elif opt in ("BHP_MIN", "BHP_MAX"):
                    if (opt == "BHP_MIN") != (kind == PRODUCER):
                        raise p.error(f"{opt} does not apply to a {kind}", ktok)
                    w["bhp"] = p.number(vtok)
                elif opt == "CONTROL":
                    w["control"] = vtok.text.lower()
                    if w["control"] not in (RATE, BHP):
                        raise p.error("CONTROL must be RATE or BHP", vtok)
                elif opt == "REFDEPTH":
                    w["ref_depth"] = p.number(vtok)
                else:
                    raise p.error(f"unknown well option {ktok.text}", ktok)
            specs[name] = w
            order.append(name)
        elif key == "PERF":
            if len(line.args) < 4:
                raise p.error("PERF needs a well name and i j k", line.keyword)
            name = line.args[0].text
            if name not in specs:
                raise p.error(f"PERF for undefined well {name}", line.args[0])
            ijk = []
            for tok, nmax in zip(line.args[1:4], dims.shape):
                v = p.number(tok)
                if v != int(v) or not 1 <= v <= nmax:
                    raise p.error(f"perforation index {tok.text} outside 1..{nmax}", tok)
                ijk.append(int(v) - 1)
            nx, ny, _ = dims.shape
            cell = ijk[0] + nx * (ijk[1] + ny * ijk[2])
            kw = {}
            for opt, (ktok, vtok) in p.pairs(line, 4).items():
                if opt == "WI":
                    kw["well_index"] = p.number(vtok)
                elif opt == "KH":
                    kw["k_h"] = "AUTO" if vtok.text.upper() == "AUTO" else p.number(vtok)
                elif opt in ("RW", "SKIN", "WFRAC", "WG"):
                    kw[{"RW": "r_w", "SKIN": "skin", "WFRAC": "w_frac", "WG": "w_g"}[opt]] = p.number(vtok)
                elif opt == "RADIUS_MODEL":
                    kw["radius_model"] = vtok.text.lower()
                    if kw["radius_model"] not in ("peaceman", "circle"):
                        raise p.error("RADIUS_MODEL must be PEACEMAN or CIRCLE", vtok)
                elif opt == "DIRECTION":
                    kw["direction"] = vtok.text.lower()
                    if kw["direction"] not in ("x", "y", "z"):
                        raise p.error("DIRECTION must be X, Y or Z", vtok)
                else:
                    raise p.error(f"unknown perforation option {ktok.text}", ktok)
            if "well_index" not in kw and "k_h" not in kw:
                kw["k_h"] = "AUTO"
            try:
                specs[name]["perfs"].append(Perforation(cell, **kw))
            except WellGeometryError as exc:
                raise p.error(str(exc), line.keyword) from exc
        else:
            raise p.error(f"unknown keyword {line.keyword.text} in WELLS", line.keyword)
    wells = []
    for name in order:
        w = specs[name]
        if w["rate"] is None:
            raise p.error(f"well {name} lacks RATE_MAX", w["tok"])
        if w["bhp"] is None:
            raise p.error(f"well {name} lacks {'BHP_MAX' if w['kind'] == INJECTOR else 'BHP_MIN'}", w["tok"])
        try:
            wells.append(WellSpec(name, w["kind"], w["perfs"], w["rate"], w["bhp"], w["ref_depth"], w["control"]))
        except ValueError as exc:
            raise p.error(str(exc), w["tok"]) from exc
    return wells


def _schedule(p, lines, wells):
    t_end = None
    reports = set()
    every = None
    events = []
    names = {w.name: w for w in wells}
    for line in lines:
        key = line.keyword.text.upper()
        if key == "TEND":
            t_end = p.numbers(line, 1)[0]
            if t_end < 0:
                raise p.error("TEND must be non-negative", line.keyword)
        elif key == "REPORT_EVERY":
            every = p.numbers(line, 1)[0]
            if not every > 0:
                raise p.error("REPORT_EVERY must be positive", line.keyword)
        elif key == "REPORT":
            reports.update(p.numbers(line))
        elif key == "AT":
            if len(line.args) != 4:
                raise p.error("AT needs: time well KEY value", line.keyword)
            t = p.number(line.args[0])
            well = line.args[1].text
            if well not in names:
                raise p.error(f"schedule refers to undefined well {well}", line.args[1])
            what = line.args[2].text.upper()
            vtok = line.args[3]
            if what in ("RATE_MAX", "BHP_MIN", "BHP_MAX"):
                value = p.number(vtok)
            elif what == "CONTROL":
                value = vtok.text.lower()
                if value not in (RATE, BHP):
                    raise p.error("CONTROL must be RATE or BHP", vtok)
            else:
                raise p.error(f"unknown schedule key {line.args[2].text}", line.args[2])
            if events and t < events[-1].time:
                raise p.error("schedule times must be increasing", line.args[0])
            events.append(ScheduleEvent(t, well, what, value, line.lineno))
        else:
            raise p.error(f"unknown keyword {line.keyword.text} in SCHEDULE", line.keyword)
    if t_end is None:
        raise p.error("SCHEDULE section lacks TEND")
    if every:
        k = 1
        while k * every < t_end * (1 - 1e-12):
            reports.add(k * every)
            k += 1
    reports = sorted(t for t in reports if 0 < t < t_end)
    return t_end, reports, events


def _transfer(p, lines):
    kw = {}
    for line in lines:
        key = line.keyword.text.upper()
        if key == "MODEL":
            if len(line.args) != 1 or line.args[0].text.lower() not in ("kazemi", "warren-root"):
                raise p.error("MODEL must be KAZEMI or WARREN-ROOT", line.keyword)
            kw["shape_model"] = line.args[0].text.lower()
        elif key == "SPACING":
            kw["frac_spacing"] = p.numbers(line, 3)
        elif key == "NSETS":
            kw["n_sets"] = int(p.numbers(line, 1)[0])
        elif key == "LENGTH":
            kw["spacing_length"] = p.numbers(line, 1)[0]
        elif key == "SIGMA":
            kw["sigma"] = p.numbers(line, 1)[0]
        elif key == "KM":
            if len(line.args) != 1:
                raise p.error("KM takes one of X Y Z ARITH GEOM HARM", line.keyword)
            kw["transfer_perm"] = line.args[0].text.lower()
        else:
            raise p.error(f"unknown keyword {line.keyword.text} in TRANSFER", line.keyword)
    return kw


_SOLVER_NUM = {
    "DT_INIT": "dt_init", "DT_MIN": "dt_min", "DT_MAX": "dt_max", "DT_GROW": "grow", "DT_CUT": "cut",
    "MAX_CUTS": "max_cuts", "NEWTON_TOL": "newton_tol", "NEWTON_MAXIT": "newton_max_iters",
    "ETA_MIN": "eta_min", "ETA_MAX": "eta_max", "ETA_INIT": "eta_initial", "DP_MAX": "dp_max",
    "DS_MAX": "ds_max", "MB_TOL": "mb_tol", "LINEAR_RESTART": "linear_restart",
    "LINEAR_MAXIT": "linear_max_iters", "MAX_SWITCHES": "max_switches",
}
_SOLVER_INT = {"max_cuts", "newton_max_iters", "linear_restart", "linear_max_iters", "max_switches"}


def _solver(p, lines):
    s = SolverSettings()
    for line in lines:
        key = line.keyword.text.upper()
        if key in _SOLVER_NUM:
            attr = _SOLVER_NUM[key]
            v = p.numbers(line, 1)[0]
            setattr(s, attr, int(v) if attr in _SOLVER_INT else v)
        elif key == "FORCING":
            if not line.args:
                raise p.error("FORCING needs a rule", line.keyword)
            rule = line.args[0].text.lower()
            if rule not in ("ew1", "ew2", "ew3", "const"):
                raise p.error("FORCING must be EW1, EW2, EW3 or CONST", line.args[0])
            s.forcing = rule
            rest = line.args[1:]
            if rule == "const":
                if len(rest) != 1:
                    raise p.error("FORCING CONST needs a value", line.keyword)
                s.forcing_constant = p.number(rest[0])
            else:
                for opt, (ktok, vtok) in p.pairs(Line(line.keyword, rest)).items():
                    if opt not in ("GAMMA", "BETA"):
                        raise p.error(f"unknown forcing option {ktok.text}", ktok)
                    setattr(s, opt.lower(), p.number(vtok))
        elif key in ("PRECOND", "PRESSURE_SET", "PRESSURE_SOLVER", "MODEL"):
            if len(line.args) != 1:
                raise p.error(f"{key} takes one value", line.keyword)
            v = line.args[0].text.lower()
            allowed = {"PRECOND": ("cpr", "ilu"), "PRESSURE_SET": ("both", "fracture"),
                       "PRESSURE_SOLVER": ("cg", "bicgstab", "gmres", "ilu"), "MODEL": ("dual", "single")}[key]
            if v not in allowed:
                raise p.error(f"{key} must be one of {', '.join(a.upper() for a in allowed)}", line.args[0])
            if key == "MODEL":
                s.single_porosity = v == "single"
            else:
                setattr(s, key.lower(), v)
        else:
            raise p.error(f"unknown keyword {line.keyword.text} in SOLVER", line.keyword)
    if not 0 < s.dt_min <= s.dt_init <= s.dt_max:
        raise p.error("SOLVER needs 0 < DT_MIN <= DT_INIT <= DT_MAX")
    return s
