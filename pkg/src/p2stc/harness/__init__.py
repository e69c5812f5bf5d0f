"""Monte Carlo harness: scenario configs, simulation engine and result files."""

from .config import ConfigFile, SimScenario
from .engine import Link, PointResult, SimResult, run_batches, run_scenario
from .output import emit_outputs, parse_csv, plot_csv, render_svg, results_to_csv

__all__ = ["ConfigFile", "Link", "PointResult", "SimResult", "SimScenario", "emit_outputs",
           "parse_csv", "plot_csv", "render_svg", "results_to_csv", "run_batches", "run_scenario"]
