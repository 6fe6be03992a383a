"""Bargaining solvers driven by most-preferred directions."""

import json

from . import _core
from ._core import (
    BargainError,
    ConfigError,
    CostModel,
    Game,
    Method,
    OracleMode,
    PreferredStateNotFound,
    SolveReport,
    SolverConfig,
    StateSpace,
    StepKind,
    Termination,
    centered_quadratic,
    check_bounded,
    dibs_step,
    estimate_direction,
    exact_direction,
    finite_diff_gradient,
    formation_cost,
    formation_initial_state,
    ksbs_ratio_spread,
    linear_cost,
    markowitz_cost,
    naive_step,
    nbs_step,
    project_simplex,
    quadratic_form,
    relative_error,
    solve,
    solve_ksbs,
    stationarity_residual,
    transform_cost,
)


def run_experiment(config, base_dir=""):
    """Run an experiment from a config dict (or JSON text); returns result records."""
    text = config if isinstance(config, str) else json.dumps(config)
    lines = _core._run_experiment_jsonl(text, str(base_dir)).splitlines()
    return [json.loads(line) for line in lines if line]


__all__ = [name for name in dir() if not name.startswith("_") and name != "json"]
