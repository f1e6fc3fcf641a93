"""Deck parsing, time marching and report writing."""
from .controller import TimestepController, TimestepUnderflow
from .deck import DeckError, SimDeck, parse_deck, parse_deck_text
from .output import OutputError, check_output_dir, read_wells_csv, write_outputs, write_vtk
from .run import (ConvergenceError, ReportRow, RunResult, RunSummary, Simulation, WellReport, build_model,
                  initialize, linear_config, newton_config, run)

__all__ = [
    "ConvergenceError",
    "DeckError",
    "OutputError",
    "ReportRow",
    "RunResult",
    "RunSummary",
    "SimDeck",
    "Simulation",
    "TimestepController",
    "TimestepUnderflow",
    "WellReport",
    "build_model",
    "check_output_dir",
    "initialize",
    "linear_config",
    "newton_config",
    "parse_deck",
    "parse_deck_text",
    "read_wells_csv",
    "run",
    "write_outputs",
    "write_vtk",
]
