"""Command line entry point: ``sim run``, ``sim check`` and ``sim version``."""
from __future__ import annotations

import argparse
import logging
import sys
from importlib import resources
from pathlib import Path

from . import __version__
from .driver import (ConvergenceError, DeckError, OutputError, Simulation, check_output_dir, parse_deck,
                     write_outputs, write_vtk)

EXIT_OK, EXIT_DECK, EXIT_CONVERGENCE, EXIT_IO = 0, 2, 3, 1

log = logging.getLogger("dpsim")


def _deck_path(name):
    """Resolve a deck path; bare names of bundled decks (ex1.deck, ...) also work."""
    p = Path(name)
    if p.exists():
        return p
    bundled = resources.files("dpsim") / "decks" / name
    if bundled.is_file():
        return Path(str(bundled))
    return p


def _snapshots(value):
    key, _, k = value.partition("=")
    if key != "every" or not k.isdigit() or int(k) < 1:
        raise argparse.ArgumentTypeError("expected every=K with K >= 1")
    return int(k)


def _forcing(value):
    v = value.lower()
    if v in ("ew1", "ew2", "ew3"):
        return v
    if v.startswith("const:"):
        try:
            float(v[6:])
        except ValueError:
            raise argparse.ArgumentTypeError("const needs a number, e.g. const:1e-4") from None
        return v
    raise argparse.ArgumentTypeError("expected ew1, ew2, ew3 or const:VAL")


def build_parser():
    ap = argparse.ArgumentParser(prog="sim", description="Fully implicit dual-porosity oil-water simulator")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a deck")
    r.add_argument("deck")
    r.add_argument("--threads", type=int, default=1)
    r.add_argument("--out", default="out")
    r.add_argument("--snapshots", type=_snapshots, default=None, metavar="every=K")
    r.add_argument("--forcing", type=_forcing, default=None, metavar="ew3|ew1|ew2|const:VAL")
    r.add_argument("--dump-linear-systems", action="store_true")
    r.add_argument("--single-porosity", action="store_true", help="fracture-only model (matrix ignored)")
    r.add_argument("--stop-at", type=float, default=None, metavar="DAY")
    r.add_argument("--checkpoint", default=None, metavar="PATH", help="write a checkpoint when the run stops")
    r.add_argument("--restart", default=None, metavar="PATH", help="resume from a checkpoint")
    c = sub.add_parser("check", help="parse and validate a deck")
    c.add_argument("deck")
    sub.add_parser("version")
    return ap


def cmd_run(args):
    try:
        deck = parse_deck(_deck_path(args.deck))
    except DeckError as exc:
        print(f"deck error: {exc}", file=sys.stderr)
        return EXIT_DECK
    if args.threads < 1:
        print("--threads must be >= 1", file=sys.stderr)
        return EXIT_DECK
    try:
        out = check_output_dir(args.out)
    except OutputError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_IO
    every = args.snapshots if args.snapshots is not None else deck.snapshot_every
    on_system = None
    if args.dump_linear_systems:
        lin_dir = out / "linear"
        lin_dir.mkdir(exist_ok=True)

        def on_system(step, it, jac, rhs):
            jac.dump(lin_dir / f"step{step:05d}_newton{it:02d}.txt", rhs)

    snaps = []

    def on_step(sim, row):
        if every and row.step % every == 0:
            p = out / "snapshots"
            p.mkdir(exist_ok=True)
            f = p / f"snap_{row.step:05d}.vtk"
            write_vtk(f, sim.model.grid, sim.state, row.time)
            snaps.append(f)

    sim = Simulation(deck, args.threads, args.forcing, True if args.single_porosity else None,
                     on_system=on_system, on_step=on_step, dump_dir=out)
    status = EXIT_OK
    try:
        if args.restart:
            sim.restore(args.restart)
        try:
            sim.run(args.stop_at)
        except ConvergenceError as exc:
            print(f"convergence failure: {exc}", file=sys.stderr)
            status = EXIT_CONVERGENCE
        if args.checkpoint:
            sim.checkpoint(args.checkpoint)
        names = [w.name for w in sim.model.wells]
        extra = {"threads": args.threads, "model": "single-porosity" if sim.single else "dual-porosity",
                 "status": "ok" if status == EXIT_OK else "convergence failure"}
        write_outputs(out, names, sim.rows, sim.summary, extra=extra)
    finally:
        sim.close()
    s = sim.summary
    print(f"t={s.final_time:g} day  steps={s.steps}  newton={s.newton_total}  linear={s.linear_total}  "
          f"wall={s.wall_time:.2f}s  -> {out}")
    return status


def cmd_check(args):
    try:
        deck = parse_deck(_deck_path(args.deck))
    except DeckError as exc:
        print(f"deck error: {exc}", file=sys.stderr)
        return EXIT_DECK
    nx, ny, nz = deck.dims.shape
    print(f"ok: {nx}x{ny}x{nz} cells, {len(deck.wells)} wells, {deck.t_end:g} days")
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    if args.command == "version":
        print(f"dpsim {__version__}")
        return EXIT_OK
    if args.command == "check":
        return cmd_check(args)
    return cmd_run(args)


if __name__ == "__main__":
    sys.exit(main())
