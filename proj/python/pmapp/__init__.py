"""Periodic multi-agent path planning."""

from ._core import (
    Environment,
    Plan,
    PmappError,
    Trajectory,
    builtin_environment,
    generate_seed_plan,
    load_environment,
    mdi_prediction,
    optimize,
    run_cli,
    sample_arrivals,
    shortest_path,
    simulate,
)

__all__ = [
    "Environment",
    "Plan",
    "PmappError",
    "Trajectory",
    "builtin_environment",
    "generate_seed_plan",
    "load_environment",
    "mdi_prediction",
    "optimize",
    "run_cli",
    "sample_arrivals",
    "shortest_path",
    "simulate",
]
