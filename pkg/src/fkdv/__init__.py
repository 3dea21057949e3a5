"""Pseudo-spectral fractional KdV lab: operators, cutoff weights, commutator
expansions, time stepping and moving-window regularity diagnostics."""

__version__ = "0.1.0"

from .spectral import Field, Grid, make_grid  # noqa: E402,F401
from .solver import SolverConfig, SolverState, run  # noqa: E402,F401
from .diagnostics import DiagnosticWindow, ladder_plan  # noqa: E402,F401
from .experiment_io import ExperimentConfig, parse_config  # noqa: E402,F401
