"""Tests for the initial value problem solvers."""

import csv
from pathlib import Path

import numpy as np
import pytest
from pydantic import ValidationError

from odegrad.core.exceptions import ArgumentError, DivergenceError, NonFiniteError
from odegrad.dynamics.architectures import build_linear
from odegrad.solvers import (
    SolveConfig,
    convergence_order,
    solve,
    solve_at_times,
    solve_on_grid,
    write_trajectory_csv,
)
from odegrad.solvers.integrate import _fixed_grid
from tests.fixtures.dynamics import rotation


def growth(z, t):
    return z


@pytest.mark.parametrize(
    "method,step_sizes,low,high",
    [
        ("euler", [0.01, 0.005, 0.0025, 0.00125], 0.9, 1.1),
        ("rk4", [0.2, 0.1, 0.05, 0.025], 3.8, 4.2),
        ("dopri5", [0.25, 0.2, 0.125, 0.1], 4.7, 5.3),
    ],
)
def test_convergence_order(method: str, step_sizes: list[float], low: float, high: float) -> None:
    """Test the fitted order of each method on exponential growth."""
    order = convergence_order(growth, np.ones(1), 0.0, 1.0, method, step_sizes, np.array([np.e]))
    assert low <= order <= high


def test_adaptive_solve_is_accurate() -> None:
    """Test that default tolerances reproduce the exact solution closely."""
    trajectory = solve(growth, np.ones(1), 0.0, 1.0)
    assert trajectory.final[0] == pytest.approx(np.e, rel=1e-6)
    np.testing.assert_array_equal(trajectory.times, [0.0, 1.0])
    assert trajectory.nfe > 0


def test_backward_in_time() -> None:
    """Test integration from t1 back to t0."""
    trajectory = solve(growth, np.ones(1), 1.0, 0.0)
    assert trajectory.final[0] == pytest.approx(np.exp(-1.0), rel=1e-6)


def test_tighter_tolerance_costs_more_and_errs_less() -> None:
    """Test the accuracy/cost trade-off of the error controller."""
    f = build_linear(rotation())
    z0 = np.array([1.0, 0.0])
    exact = np.array([np.cos(5.0), np.sin(5.0)])
    loose = solve(f, z0, 0.0, 5.0, SolveConfig(rtol=1e-4, atol=1e-4))
    tight = solve(f, z0, 0.0, 5.0, SolveConfig(rtol=1e-10, atol=1e-10))
    assert tight.nfe > loose.nfe
    assert np.max(np.abs(tight.final - exact)) < np.max(np.abs(loose.final - exact))
    assert np.max(np.abs(tight.final - exact)) < 1e-7


def test_forward_then_backward_recovers_initial_state() -> None:
    """Test that a tight reverse solve undoes a forward solve."""
    f = build_linear(np.array([[-0.5, 1.0], [-1.0, -0.2]]))
    z0 = np.array([0.7, -0.3])
    cfg = SolveConfig(rtol=1e-11, atol=1e-11)
    z1 = solve(f, z0, 0.0, 2.0, cfg).final
    np.testing.assert_allclose(solve(f, z1, 2.0, 0.0, cfg).final, z0, atol=1e-8)


def test_record_steps_gives_monotone_times() -> None:
    """Test that recorded accepted steps are strictly increasing and end at t1."""
    trajectory = solve(growth, np.ones(1), 0.0, 2.0, SolveConfig(record_steps=True))
    assert len(trajectory) > 2
    assert np.all(np.diff(trajectory.times) > 0)
    assert trajectory.times[-1] == 2.0
    assert len(trajectory.stats.error_norms) == trajectory.stats.accepted


def test_fixed_step_evaluation_counts() -> None:
    """Test NFE of the fixed-step methods."""
    z0 = np.ones(1)
    assert solve(growth, z0, 0.0, 1.0, SolveConfig(method="euler", step_size=0.1)).nfe == 10
    assert solve(growth, z0, 0.0, 1.0, SolveConfig(method="rk4", step_size=0.25)).nfe == 16


def test_batched_states() -> None:
    """Test that a batch of states integrates row by row."""
    z0 = np.array([[1.0], [2.0]])
    final = solve(growth, z0, 0.0, 1.0).final
    np.testing.assert_allclose(final[:, 0], [np.e, 2.0 * np.e], rtol=1e-6)


def test_solve_at_times_hits_every_time() -> None:
    """Test states at requested observation times."""
    times = [0.0, 0.3, 0.5, 1.2]
    trajectory = solve_at_times(growth, np.ones(1), times)
    np.testing.assert_array_equal(trajectory.times, times)
    np.testing.assert_allclose(trajectory.states[:, 0], np.exp(times), rtol=1e-6)


def test_solve_at_times_rejects_ties() -> None:
    """Test that non-monotone times raise ArgumentError."""
    with pytest.raises(ArgumentError):
        solve_at_times(growth, np.ones(1), [0.0, 0.5, 0.5])


def test_solve_on_grid_uses_the_supplied_grid() -> None:
    """Test fixed steps along a caller-supplied grid."""
    grid = np.linspace(0.0, 1.0, 21)
    trajectory = solve_on_grid(growth, np.ones(1), grid, method="rk4")
    assert trajectory.nfe == 80
    assert trajectory.final[0] == pytest.approx(np.e, rel=1e-6)


def test_equal_endpoints_raise() -> None:
    """Test that an empty interval is rejected."""
    with pytest.raises(ArgumentError):
        solve(growth, np.ones(1), 1.0, 1.0)


def test_max_steps_raises_divergence() -> None:
    """Test that exceeding the step budget raises DivergenceError."""
    cfg = SolveConfig(rtol=1e-12, atol=1e-12, max_steps=5)
    with pytest.raises(DivergenceError) as excinfo:
        solve(build_linear(rotation(10.0)), np.array([1.0, 0.0]), 0.0, 10.0, cfg)
    assert excinfo.value.steps == 5


def test_overflow_raises_non_finite() -> None:
    """Test that a state overflow raises NonFiniteError."""
    cfg = SolveConfig(method="euler", step_size=0.5)
    with np.errstate(over="ignore", invalid="ignore"):
        with pytest.raises(NonFiniteError):
            solve(lambda z, t: z * z, np.array([1e200]), 0.0, 1.0, cfg)


def test_config_is_validated() -> None:
    """Test that invalid settings are rejected by the config model."""
    with pytest.raises(ValidationError):
        SolveConfig(rtol=0.0)
    with pytest.raises(ValidationError):
        SolveConfig(method="midpoint")
    assert SolveConfig().with_tolerance(1e-3).atol == 1e-3


def test_write_trajectory_csv(tmp_path: Path) -> None:
    """Test the trajectory CSV header and row count."""
    trajectory = solve_at_times(growth, np.array([1.0, 2.0]), [0.0, 0.5, 1.0])
    path = write_trajectory_csv(trajectory, tmp_path / "traj.csv")
    with open(path) as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["t", "z_0", "z_1"]
    assert len(rows) == 4
    assert float(rows[2][0]) == 0.5


@pytest.mark.parametrize("t0,t1,step", [(0.0, 1.0, 0.1), (0.3, 2.0, 0.07), (1.0, -1.0, 0.25)])
def test_fixed_grid_matches_linspace(t0: float, t1: float, step: float) -> None:
    """Test the on-demand fixed-step grid reproduces the equally spaced times exactly."""
    grid = _fixed_grid(t0, t1, step)
    expected = np.linspace(t0, t1, len(grid))
    assert [grid[i] for i in range(len(grid))] == list(expected)
    with pytest.raises(IndexError):
        grid[len(grid)]
