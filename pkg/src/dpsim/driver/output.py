"""Report files: wells.csv, summary.txt, legacy VTK snapshots and a plot script."""
from __future__ import annotations

import os
from pathlib import Path

import numpy as np

WELL_COLUMNS = ("oil_rate", "water_rate", "water_rate_rb", "bhp", "control")
LEAD_COLUMNS = ("time", "dt", "step", "newton", "linear")
TAIL_COLUMNS = ("cum_oil_prod", "cum_water_prod", "cum_water_inj", "mb_err_oil", "mb_err_water")


class OutputError(OSError):
    pass


def check_output_dir(path):
    """Create ``path`` if needed and make sure files can be written there."""
    path = Path(path)
    try:
        path.mkdir(parents=True, exist_ok=True)
        probe = path / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise OutputError(f"output directory {path} is not writable: {exc}") from exc
    return path


def fmt(v):
    """Shortest round-trip representation, so reruns compare byte for byte."""
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def csv_header(well_names):
    cols = list(LEAD_COLUMNS)
    for name in well_names:
        cols.extend(f"{name}:{c}" for c in WELL_COLUMNS)
    cols.extend(TAIL_COLUMNS)
    return cols


def row_values(row):
    vals = [row.time, row.dt, row.step, row.newton, row.linear]
    for w in row.wells:
        vals.extend([w.oil_rate, w.water_rate, w.water_rate_rb, w.bhp, w.control])
    vals.extend([row.cum_oil_prod, row.cum_water_prod, row.cum_water_inj, row.mb_err_oil, row.mb_err_water])
    return vals


def write_wells_csv(path, well_names, rows):
    lines = [",".join(csv_header(well_names))]
    lines.extend(",".join(fmt(v) for v in row_values(r)) for r in rows)
    Path(path).write_text("\n".join(lines) + "\n")


def read_wells_csv(path):
    """Columns of a wells.csv as a dict of numpy arrays (strings kept for control columns)."""
    text = Path(path).read_text().splitlines()
    header = text[0].split(",")
    data = [line.split(",") for line in text[1:] if line]
    out = {}
    for k, name in enumerate(header):
        col = [r[k] for r in data]
        if name.endswith(":control"):
            out[name] = np.array(col, dtype=object)
        else:
            out[name] = np.array([float(v) for v in col])
    return out


def write_summary(path, summary, extra=None):
    lines = [
        f"steps = {summary.steps}",
        f"newton_iterations = {summary.newton_total}",
        f"linear_iterations = {summary.linear_total}",
        f"wall_time_s = {summary.wall_time:.3f}",
        f"time_step_cuts = {summary.cuts}",
        f"constraint_switches = {summary.switches}",
        f"final_time_day = {fmt(summary.final_time)}",
    ]
    for key, value in (extra or {}).items():
        lines.append(f"{key} = {value}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_vtk(path, grid, state, time=0.0):
    """Legacy ASCII VTK rectilinear grid with per-cell pressures and saturations."""
    dims = grid.dims
    nx, ny, nz = dims.shape
    xs = np.concatenate([[0.0], np.cumsum(dims.dx)])
    ys = np.concatenate([[0.0], np.cumsum(dims.dy)])
    top = grid.depth[0] - grid.dz[0] / 2.0
    zs = top + np.concatenate([[0.0], np.cumsum(dims.dz)])
    out = [
        "# vtk DataFile Version 3.0",
        f"dpsim snapshot t={fmt(time)}",
        "ASCII",
        "DATASET RECTILINEAR_GRID",
        f"DIMENSIONS {nx + 1} {ny + 1} {nz + 1}",
        f"X_COORDINATES {nx + 1} double",
        " ".join(fmt(v) for v in xs),
        f"Y_COORDINATES {ny + 1} double",
        " ".join(fmt(v) for v in ys),
        f"Z_COORDINATES {nz + 1} double",
        " ".join(fmt(v) for v in zs),
        f"CELL_DATA {grid.n_cells}",
    ]
    names = ("p_f", "s_wf", "p_m", "s_wm")
    for k in range(state.cells.shape[1]):
        out.append(f"SCALARS {names[k]} double 1")
        out.append("LOOKUP_TABLE default")
        out.append(" ".join(fmt(v) for v in state.cells[:, k]))
    Path(path).write_text("\n".join(out) + "\n")


PLOT_SCRIPT = '''"""Plot oil rate, bottom-hole pressure and water rate per well from wells.csv."""
import csv
import os
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
path = sys.argv[1] if len(sys.argv) > 1 else os.path.join(here, "wells.csv")
with open(path) as fh:
    rows = list(csv.DictReader(fh))
t = [float(r["time"]) for r in rows]
wells = [c[:-len(":oil_rate")] for c in rows[0] if c.endswith(":oil_rate")] if rows else []

for column, ylabel, fname in (
    ("oil_rate", "Oil rate (STB/day)", "oil_rate.png"),
    ("bhp", "Bottom-hole pressure (psi)", "bhp.png"),
    ("water_rate", "Water rate (STB/day)", "water_rate.png"),
):
    fig, ax = plt.subplots(figsize=(6, 4))
    for w in wells:
        ax.plot(t, [float(r[w + ":" + column]) for r in rows], label=w)
    ax.set_xlabel("Time (day)")
    ax.set_ylabel(ylabel)
    ax.legend()
    fig.tight_layout()
    fig.savefig(os.path.join(here, fname), dpi=120)
    plt.close(fig)
'''


def write_plot_script(path):
    Path(path).write_text(PLOT_SCRIPT)


def write_outputs(out_dir, well_names, rows, summary, snapshots=(), grid=None, extra=None):
    """Write every report file into ``out_dir``; ``snapshots`` is a list of (step, time, state)."""
    out = Path(out_dir)
    files = [out / "wells.csv", out / "summary.txt", out / "plot_wells.py"]
    write_wells_csv(files[0], well_names, rows)
    write_summary(files[1], summary, extra)
    write_plot_script(files[2])
    if snapshots:
        snap_dir = out / "snapshots"
        os.makedirs(snap_dir, exist_ok=True)
        for step, t, state in snapshots:
            p = snap_dir / f"snap_{step:05d}.vtk"
            write_vtk(p, grid, state, t)
            files.append(p)
    return files
