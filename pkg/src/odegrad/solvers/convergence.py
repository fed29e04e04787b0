"""Empirical order of accuracy of the integrators."""

import logging
from collections.abc import Sequence

import numpy as np

from odegrad.core.exceptions import ArgumentError
from odegrad.core.tensor import Tensor, as_tensor
from odegrad.solvers.config import SolveConfig
from odegrad.solvers.integrate import VectorField, solve

logger = logging.getLogger(__name__)

REFERENCE_TOLERANCE = 1e-13


def convergence_order(
    f: VectorField,
    z0: Tensor,
    t0: float,
    t1: float,
    method: str,
    step_sizes: Sequence[float],
    reference: Tensor | None = None,
) -> float:
    """Least-squares slope of log(error) against log(step size).

    Args:
        f: Vector field
        z0: Initial state
        t0: Start time
        t1: End time
        method: "euler", "rk4" or "dopri5" (dopri5 runs with fixed accepted steps)
        step_sizes: Step sizes to try; each should divide t1 - t0
        reference: Exact z(t1); a tight adaptive solve is used when omitted

    Returns:
        Fitted order p
    """
    if len(step_sizes) < 2:
        raise ArgumentError("convergence_order needs at least two step sizes")
    if reference is None:
        tight = SolveConfig(rtol=REFERENCE_TOLERANCE, atol=REFERENCE_TOLERANCE)
        reference = solve(f, z0, t0, t1, tight).final
    reference = as_tensor(reference)

    errors = []
    for h in step_sizes:
        cfg = SolveConfig(method=method, step_size=h, adaptive=False)
        errors.append(float(np.max(np.abs(solve(f, z0, t0, t1, cfg).final - reference))))
    if min(errors) <= 0.0:
        raise ArgumentError("convergence_order: zero error, cannot fit an order")

    order = float(np.polyfit(np.log(step_sizes), np.log(errors), 1)[0])
    logger.debug(f"{method}: errors={errors} order={order:.3f}")
    return order
