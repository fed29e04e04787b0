"""Sampling and exact log-density evaluation for continuous normalizing flows."""

import logging

import numpy as np

from odegrad.cnf.model import CnfModel, FlowState, standard_normal_logpdf
from odegrad.core.exceptions import ArgumentError, DimensionError
from odegrad.core.rng import RngState, gaussian_sample
from odegrad.core.tensor import Tensor, as_tensor
from odegrad.solvers.config import SolveConfig, Trajectory
from odegrad.solvers.integrate import DEFAULT_CONFIG, solve, solve_at_times

logger = logging.getLogger(__name__)


def _as_points(model: CnfModel, x: Tensor, operation: str) -> Tensor:
    x = as_tensor(x)
    if x.ndim != 2 or x.shape[1] != model.dim:
        raise DimensionError(operation, f"(n, {model.dim})", x.shape)
    return x


def _initial_state(x: Tensor) -> Tensor:
    return FlowState(x, np.zeros(x.shape[0])).pack()


def push_forward(
    model: CnfModel, z0: Tensor, cfg: SolveConfig = DEFAULT_CONFIG
) -> tuple[FlowState, Trajectory]:
    """Integrate base samples z0[n, D] from t0 to t1 with their log-density change."""
    z0 = _as_points(model, z0, "push_forward")
    trajectory = solve(model.flow, _initial_state(z0), model.t0, model.t1, cfg)
    return FlowState.unpack(trajectory.final), trajectory


def pull_back(
    model: CnfModel, x: Tensor, cfg: SolveConfig = DEFAULT_CONFIG
) -> tuple[FlowState, Trajectory]:
    """Integrate data points x[n, D] from t1 back to t0.

    The returned delta_logp is the integral of -tr(df/dz) from t1 to t0, so
    log q(x) = log N(z0) - delta_logp.
    """
    x = _as_points(model, x, "pull_back")
    trajectory = solve(model.flow, _initial_state(x), model.t1, model.t0, cfg)
    return FlowState.unpack(trajectory.final), trajectory


def forward_sample(
    model: CnfModel, rng: RngState, n: int, cfg: SolveConfig = DEFAULT_CONFIG
) -> tuple[Tensor, Tensor]:
    """Draw n samples and their exact log-densities.

    Returns:
        Tuple of (samples[n, D], log q(samples)[n])
    """
    z0 = gaussian_sample(rng, (n, model.dim))
    end, trajectory = push_forward(model, z0, cfg)
    logger.verbose(f"forward_sample n={n}: nfe={trajectory.nfe}")
    return end.z, standard_normal_logpdf(z0) + end.delta_logp


def log_density(model: CnfModel, x: Tensor, cfg: SolveConfig = DEFAULT_CONFIG) -> Tensor:
    """Exact log q(x) per row of x[n, D] by integrating back to the base distribution."""
    end, _ = pull_back(model, x, cfg)
    return standard_normal_logpdf(end.z) - end.delta_logp


def flow_snapshots(
    model: CnfModel, rng: RngState, n: int, times: Tensor, cfg: SolveConfig = DEFAULT_CONFIG
) -> Tensor:
    """n base samples pushed to each requested time in (t0, t1], shape (len(times), n, D)."""
    times = as_tensor(times)
    if times.ndim != 1 or len(times) == 0 or np.any(times <= model.t0):
        raise ArgumentError(f"flow_snapshots: times must lie after t0={model.t0}")
    z0 = gaussian_sample(rng, (n, model.dim))
    trajectory = solve_at_times(model.dynamics, z0, np.concatenate([[model.t0], times]), cfg)
    return trajectory.states[1:]


def density_grid(
    model: CnfModel,
    low: float,
    high: float,
    resolution: int,
    cfg: SolveConfig = DEFAULT_CONFIG,
) -> tuple[Tensor, Tensor]:
    """Model log-density on a square resolution x resolution grid over [low, high]^2.

    Returns:
        Tuple of (axis coordinates[resolution], logq[resolution, resolution]) with
        logq[i, j] evaluated at (axis[j], axis[i])
    """
    axis = np.linspace(low, high, resolution)
    xx, yy = np.meshgrid(axis, axis)
    points = np.column_stack([xx.ravel(), yy.ravel()])
    return axis, log_density(model, points, cfg).reshape(resolution, resolution)
