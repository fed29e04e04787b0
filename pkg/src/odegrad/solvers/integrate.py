"""Initial value problem solvers: fixed-step Euler/RK4 and adaptive Dormand-Prince 5(4)."""

import logging
import math
from collections.abc import Callable, Sequence

import numpy as np

from odegrad.core.exceptions import ArgumentError, DivergenceError, NonFiniteError
from odegrad.core.tensor import Tensor, as_tensor, check_finite
from odegrad.solvers.config import (
    MAX_STEP_FACTOR,
    MIN_STEP_FACTOR,
    SolveConfig,
    SolverStats,
    Trajectory,
)
from odegrad.solvers.tableaux import DOPRI5, TABLEAUX, Tableau

logger = logging.getLogger(__name__)

VectorField = Callable[[Tensor, float], Tensor]

DEFAULT_CONFIG = SolveConfig()
MIN_RELATIVE_STEP = 1e-14


class _CountingField:
    """Wraps a vector field and counts its evaluations."""

    def __init__(self, f: VectorField) -> None:
        self.f = f
        self.nfe = 0

    def __call__(self, y: Tensor, t: float) -> Tensor:
        self.nfe += 1
        return self.f(y, t)


def _rk_step(
    field: _CountingField, tableau: Tableau, t: float, y: Tensor, dt: float, k1: Tensor
) -> tuple[Tensor, Tensor | None, Tensor]:
    """Advance one explicit RK step of signed size dt from (t, y) with first stage k1.

    Returns:
        Tuple of (new state, local error estimate or None, last stage)
    """
    ks = [k1]
    for i in range(1, tableau.stages):
        coeffs = tableau.a[i - 1]
        y_stage = y + dt * sum(c * k for c, k in zip(coeffs, ks) if c != 0.0)
        ks.append(field(y_stage, t + tableau.c[i] * dt))
    if tableau.fsal:
        # last stage was evaluated at the new state
        y_new = y_stage
    else:
        y_new = y + dt * sum(c * k for c, k in zip(tableau.b, ks) if c != 0.0)
    error = None
    if tableau.error is not None:
        error = dt * sum(c * k for c, k in zip(tableau.error, ks) if c != 0.0)
    return y_new, error, ks[-1]


def _rms(x: Tensor) -> float:
    return float(np.sqrt(np.mean(np.square(x))))


def error_norm(error: Tensor, y: Tensor, y_new: Tensor, cfg: SolveConfig) -> float:
    """RMS of the componentwise scaled local error."""
    scale = cfg.atol + cfg.rtol * np.maximum(np.abs(y), np.abs(y_new))
    return _rms(error / scale)


def _initial_step(
    field: _CountingField, t0: float, y0: Tensor, f0: Tensor, direction: float, cfg: SolveConfig
) -> float:
    """Automatic first step size from the size of y0, f(y0) and a trial Euler step."""
    scale = cfg.atol + cfg.rtol * np.abs(y0)
    d0 = _rms(y0 / scale)
    d1 = _rms(f0 / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    f1 = field(y0 + direction * h0 * f0, t0 + direction * h0)
    d2 = _rms((f1 - f0) / scale) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / (DOPRI5.order))
    return min(100.0 * h0, h1)


def _check_state(y: Tensor, t: float) -> None:
    if not np.all(np.isfinite(y)):
        raise NonFiniteError("solve", f"state at t={t:.6g}")


def _solve_adaptive(
    field: _CountingField, z0: Tensor, t0: float, t1: float, cfg: SolveConfig
) -> Trajectory:
    direction = 1.0 if t1 > t0 else -1.0
    stats = SolverStats()
    t, y = t0, z0
    k1 = field(y, t)
    h = cfg.first_step or _initial_step(field, t, y, k1, direction, cfg)
    times, states = [t0], [z0]
    attempts = 0
    previous_rejected = False

    while direction * (t1 - t) > 0:
        if attempts >= cfg.max_steps:
            raise DivergenceError(f"max_steps={cfg.max_steps} exceeded", attempts, t)
        remaining = abs(t1 - t)
        last = h >= remaining
        if last:
            h = remaining
        if h <= MIN_RELATIVE_STEP * max(1.0, abs(t)):
            raise DivergenceError(f"step size underflow (h={h:.3g})", attempts, t)

        y_new, error, k_last = _rk_step(field, DOPRI5, t, y, direction * h, k1)
        attempts += 1
        _check_state(y_new, t + direction * h)
        err = error_norm(error, y, y_new, cfg)

        if err <= 1.0:
            t = t1 if last else t + direction * h
            y, k1 = y_new, k_last
            stats.accepted += 1
            stats.error_norms.append(err)
            if cfg.record_steps and not last:
                times.append(t)
                states.append(y)
            factor = MAX_STEP_FACTOR if err == 0.0 else cfg.safety * err ** (-1.0 / DOPRI5.order)
            factor = min(MAX_STEP_FACTOR, max(MIN_STEP_FACTOR, factor))
            if previous_rejected:
                factor = min(1.0, factor)
            h *= factor
            previous_rejected = False
        else:
            h_new = h * max(MIN_STEP_FACTOR, cfg.safety * err ** (-1.0 / DOPRI5.order))
            stats.rejected += 1
            stats.rejections.append((h, h_new))
            logger.debug(f"Rejected step h={h:.3g} at t={t:.6g} (err={err:.3g})")
            h = h_new
            previous_rejected = True

    times.append(t1)
    states.append(y)
    return Trajectory(np.asarray(times), np.stack(states), field.nfe, stats)


class _UniformGrid:
    """Equally spaced times from t0 to t1, computed on demand.

    Matches np.linspace(t0, t1, n + 1) value for value without storing it.
    """

    def __init__(self, t0: float, t1: float, n: int) -> None:
        self.t0 = t0
        self.t1 = t1
        self.n = n
        self.step = (t1 - t0) / n

    def __len__(self) -> int:
        return self.n + 1

    def __getitem__(self, i: int) -> float:
        if not 0 <= i <= self.n:
            raise IndexError(i)
        return self.t1 if i == self.n else self.t0 + i * self.step


def _fixed_grid(t0: float, t1: float, step_size: float) -> _UniformGrid:
    n = max(1, math.ceil(abs(t1 - t0) / step_size - 1e-9))
    return _UniformGrid(t0, t1, n)


def _solve_grid(
    field: _CountingField,
    z0: Tensor,
    grid: Tensor | _UniformGrid,
    tableau: Tableau,
    record: bool,
) -> Trajectory:
    stats = SolverStats()
    y = z0
    k1 = field(y, grid[0]) if tableau.fsal else None
    times, states = [grid[0]], [z0]
    for i in range(len(grid) - 1):
        t, dt = grid[i], grid[i + 1] - grid[i]
        if not tableau.fsal:
            k1 = field(y, t)
        y, _, k_last = _rk_step(field, tableau, t, y, dt, k1)
        _check_state(y, grid[i + 1])
        if tableau.fsal:
            k1 = k_last
        stats.accepted += 1
        if record or i == len(grid) - 2:
            times.append(grid[i + 1])
            states.append(y)
    return Trajectory(np.asarray(times, dtype=np.float64), np.stack(states), field.nfe, stats)


def solve(
    f: VectorField, z0: Tensor, t0: float, t1: float, cfg: SolveConfig = DEFAULT_CONFIG
) -> Trajectory:
    """Integrate dz/dt = f(z, t) from t0 to t1 (either direction).

    Returns:
        Trajectory with times [t0, t1] (plus accepted steps when cfg.record_steps)

    Raises:
        ArgumentError: If t0 == t1
        DivergenceError: If max_steps is exceeded or the step size underflows
        NonFiniteError: If the state becomes non-finite
    """
    t0, t1 = float(t0), float(t1)
    if t0 == t1:
        raise ArgumentError("solve: t0 and t1 must differ")
    z0 = check_finite(as_tensor(z0).copy(), "solve initial state")
    field = _CountingField(f)
    if cfg.is_adaptive:
        trajectory = _solve_adaptive(field, z0, t0, t1, cfg)
    else:
        grid = _fixed_grid(t0, t1, cfg.step_size)
        trajectory = _solve_grid(field, z0, grid, TABLEAUX[cfg.method], cfg.record_steps)
    logger.verbose(
        f"solve {cfg.method} [{t0:.4g} -> {t1:.4g}]: nfe={trajectory.nfe} "
        f"accepted={trajectory.stats.accepted} rejected={trajectory.stats.rejected}"
    )
    return trajectory


def solve_on_grid(
    f: VectorField, z0: Tensor, grid: Sequence[float], method: str = "dopri5"
) -> Trajectory:
    """Integrate with fixed steps between consecutive points of a supplied grid."""
    grid = as_tensor(grid)
    if grid.ndim != 1 or len(grid) < 2:
        raise ArgumentError("solve_on_grid: grid needs at least two times")
    z0 = check_finite(as_tensor(z0).copy(), "solve initial state")
    return _solve_grid(_CountingField(f), z0, grid, TABLEAUX[method], record=False)


def check_monotone(times: Tensor, operation: str) -> float:
    """Return the direction (+1/-1) of a strictly monotone time sequence."""
    if times.ndim != 1 or len(times) < 2:
        raise ArgumentError(f"{operation}: need at least two times")
    diffs = np.diff(times)
    if np.all(diffs > 0):
        return 1.0
    if np.all(diffs < 0):
        return -1.0
    raise ArgumentError(f"{operation}: times must be strictly monotone (no ties)")


def solve_at_times(
    f: VectorField, z0: Tensor, times: Sequence[float], cfg: SolveConfig = DEFAULT_CONFIG
) -> Trajectory:
    """States at exactly the requested times, restarting the integrator at each one."""
    times = as_tensor(times)
    check_monotone(times, "solve_at_times")
    z0 = check_finite(as_tensor(z0).copy(), "solve initial state")
    stats = SolverStats()
    states = [z0]
    nfe = 0
    y = z0
    step_cfg = cfg.model_copy(update={"record_steps": False}) if cfg.record_steps else cfg
    for t_start, t_end in zip(times[:-1], times[1:]):
        piece = solve(f, y, t_start, t_end, step_cfg)
        y = piece.final
        states.append(y)
        nfe += piece.nfe
        stats.merge(piece.stats)
    return Trajectory(times.copy(), np.stack(states), nfe, stats)
