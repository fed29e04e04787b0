"""Trajectory export."""

from pathlib import Path

from odegrad.core.io import write_csv
from odegrad.solvers.config import Trajectory


def trajectory_header(trajectory: Trajectory) -> list[str]:
    return ["t"] + [f"z_{i}" for i in range(trajectory.state_dim)]


def trajectory_rows(trajectory: Trajectory) -> list[list[float]]:
    """One row per time: t followed by the flattened state."""
    return [
        [float(t), *map(float, state.ravel())]
        for t, state in zip(trajectory.times, trajectory.states)
    ]


def write_trajectory_csv(trajectory: Trajectory, path: Path) -> Path:
    """Write header ``t,z_0,...,z_{D-1}`` and one 17-digit row per time."""
    return write_csv(path, trajectory_header(trajectory), trajectory_rows(trajectory))
