"""Reverse-mode gradients of ODE solutions by the adjoint sensitivity method."""

import logging
import warnings
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from odegrad.adjoint.augmented import AugmentedDynamics, AugmentedState
from odegrad.core.exceptions import ArgumentError, DimensionError, ReversalWarning
from odegrad.core.tensor import Tensor, as_tensor
from odegrad.dynamics.base import DynamicsFunc
from odegrad.solvers.config import SolveConfig, Trajectory
from odegrad.solvers.integrate import DEFAULT_CONFIG, solve

logger = logging.getLogger(__name__)

REVERSAL_TOLERANCE_FACTOR = 100.0


@dataclass(frozen=True)
class GradientBundle:
    """Gradients of a scalar loss with respect to every input of an initial value problem.

    d_t0/d_t1 are None for methods that do not produce time gradients. d_times holds one
    gradient per observation time for multi-observation losses.
    """

    d_z0: Tensor
    d_theta: Tensor
    d_t0: float | None = None
    d_t1: float | None = None
    d_times: Tensor | None = None
    nfe: int = 0
    augmented_size: int = 0
    tape_length: int = 0
    z0_reconstructed: Tensor | None = None
    reversal_error: float | None = None


def _reverse_interval(
    aug: AugmentedDynamics, s: AugmentedState, t_from: float, t_to: float, cfg: SolveConfig
) -> tuple[AugmentedState, int]:
    """Integrate the augmented system from t_from back to t_to in one solver call."""
    trajectory = solve(aug, s.pack(), t_from, t_to, cfg)
    return aug.unpack(trajectory.final), trajectory.nfe


def _reversal_check(reconstructed: Tensor, known: Tensor, cfg: SolveConfig) -> float:
    """Compare a backwards-recomputed state with the stored forward one; warn when far apart."""
    error = float(np.max(np.abs(reconstructed - known)))
    bound = REVERSAL_TOLERANCE_FACTOR * (cfg.atol + cfg.rtol * float(np.max(np.abs(known))))
    if error > bound:
        message = f"Reconstructed initial state differs by {error:.3g} (bound {bound:.3g})"
        logger.warning(message)
        warnings.warn(message, ReversalWarning, stacklevel=3)
    return error


def backward_gradients(
    f: DynamicsFunc,
    z_t1: Tensor,
    t0: float,
    t1: float,
    dL_dz1: Tensor,
    cfg: SolveConfig = DEFAULT_CONFIG,
    z0: Tensor | None = None,
) -> GradientBundle:
    """Gradients of L(z(t1)) w.r.t. z(t0), theta, t0 and t1.

    z is recomputed backwards alongside the adjoint in a single reverse-time solve.

    Args:
        f: Dynamics function
        z_t1: Forward solution at t1
        t0: Start time of the forward solve
        t1: End time of the forward solve
        dL_dz1: Loss gradient at z(t1)
        cfg: Solver settings for the reverse solve
        z0: Known forward initial state, enables the reversal-consistency check

    Returns:
        GradientBundle with d_z0, d_theta, d_t0, d_t1
    """
    z_t1 = as_tensor(z_t1)
    dL_dz1 = as_tensor(dL_dz1)
    if dL_dz1.shape != z_t1.shape:
        raise DimensionError("backward_gradients seed", z_t1.shape, dL_dz1.shape)

    aug = AugmentedDynamics(f, z_t1.shape)
    # Computed directly, not integrated
    dL_dt1 = float(np.sum(dL_dz1 * f.eval(z_t1, t1)))
    start = AugmentedState(z_t1, dL_dz1, np.zeros(f.param_count), -dL_dt1)
    end, nfe = _reverse_interval(aug, start, t1, t0, cfg)

    reversal_error = None
    if z0 is not None:
        reversal_error = _reversal_check(end.z, as_tensor(z0), cfg)

    return GradientBundle(
        d_z0=end.a,
        d_theta=end.a_theta,
        d_t0=end.a_t,
        d_t1=dL_dt1,
        nfe=nfe,
        augmented_size=aug.size,
        z0_reconstructed=end.z,
        reversal_error=reversal_error,
    )


def backward_gradients_multi(
    f: DynamicsFunc,
    trajectory: Trajectory,
    dL_dzi: Sequence[Tensor],
    cfg: SolveConfig = DEFAULT_CONFIG,
) -> GradientBundle:
    """Gradients of a loss that depends on the solution at several observation times.

    The reverse pass is split at every observation: each interval [t_i, t_{i-1}] is one
    reverse solve restarted from the stored forward state, and dL/dz(t_{i-1}) is added to
    the adjoint at each boundary.

    Args:
        f: Dynamics function
        trajectory: Forward solution at strictly ascending observation times (t_0 first)
        dL_dzi: Loss gradient at every observation (zeros where the loss does not look)
        cfg: Solver settings for the reverse solves

    Returns:
        GradientBundle with d_times (one entry per observation), d_t0 = d_times[0] and
        d_t1 = d_times[-1]
    """
    times = as_tensor(trajectory.times)
    states = trajectory.states
    if len(dL_dzi) != len(times) or len(states) != len(times):
        raise ArgumentError(
            f"backward_gradients_multi: {len(times)} times, {len(states)} states, "
            f"{len(dL_dzi)} loss gradients"
        )
    if len(times) < 2:
        raise ArgumentError("backward_gradients_multi: need at least two times")
    if np.any(np.diff(times) <= 0):
        raise ArgumentError("backward_gradients_multi: times must be strictly ascending (no ties)")

    z_shape = np.shape(states[-1])
    aug = AugmentedDynamics(f, z_shape)
    a = as_tensor(dL_dzi[-1]).copy()
    a_t = 0.0
    a_theta = np.zeros(f.param_count)
    time_grads = []
    nfe = 0
    worst_reversal = 0.0

    for i in range(len(times) - 1, 0, -1):
        g_i = as_tensor(dL_dzi[i])
        z_i = as_tensor(states[i])
        # Effect of moving the observation time itself
        current = float(np.sum(g_i * f.eval(z_i, times[i])))
        time_grads.append(current)
        a_t -= current

        start = AugmentedState(z_i, a, a_theta, a_t)
        end, interval_nfe = _reverse_interval(aug, start, times[i], times[i - 1], cfg)
        nfe += interval_nfe
        worst_reversal = max(
            worst_reversal, float(np.max(np.abs(end.z - as_tensor(states[i - 1]))))
        )
        a = end.a + as_tensor(dL_dzi[i - 1])
        a_theta, a_t = end.a_theta, end.a_t

    time_grads.append(a_t)
    d_times = np.asarray(time_grads[::-1])
    return GradientBundle(
        d_z0=a,
        d_theta=a_theta,
        d_t0=float(d_times[0]),
        d_t1=float(d_times[-1]),
        d_times=d_times,
        nfe=nfe,
        augmented_size=aug.size,
        reversal_error=worst_reversal,
    )
