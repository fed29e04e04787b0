"""Initial value problem solvers with NFE instrumentation."""

from odegrad.solvers.config import SolveConfig, SolverStats, Trajectory
from odegrad.solvers.convergence import convergence_order
from odegrad.solvers.export import write_trajectory_csv
from odegrad.solvers.integrate import (
    VectorField,
    check_monotone,
    error_norm,
    solve,
    solve_at_times,
    solve_on_grid,
)

__all__ = [
    "SolveConfig",
    "SolverStats",
    "Trajectory",
    "VectorField",
    "check_monotone",
    "convergence_order",
    "error_norm",
    "solve",
    "solve_at_times",
    "solve_on_grid",
    "write_trajectory_csv",
]
