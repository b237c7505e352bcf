"""Experiment drivers, error norms and report output."""

from .experiments import (
    FAMILIES,
    AuditReport,
    ConfigError,
    ConvergenceReport,
    ExperimentConfig,
    SweepReport,
    make_mesh,
    observed_order,
    run_epsilon_sweep,
    run_monotonicity_audit,
    run_refinement,
)
from .norms import a_norm, flux_error, inf_norm, interpolant
from .output import emit_plots
from .problems import example1, exact_solution_ex1, sine_problem

__all__ = [
    "FAMILIES",
    "AuditReport",
    "ConfigError",
    "ConvergenceReport",
    "ExperimentConfig",
    "SweepReport",
    "a_norm",
    "emit_plots",
    "exact_solution_ex1",
    "example1",
    "flux_error",
    "inf_norm",
    "interpolant",
    "make_mesh",
    "observed_order",
    "run_epsilon_sweep",
    "run_monotonicity_audit",
    "run_refinement",
    "sine_problem",
]
