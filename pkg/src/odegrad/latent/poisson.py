"""Inhomogeneous Poisson process likelihood driven by a latent trajectory."""

import logging
from dataclasses import dataclass, replace

import numpy as np

from odegrad.adjoint.gradients import backward_gradients_multi
from odegrad.core.exceptions import ArgumentError, DimensionError
from odegrad.core.rng import RngState
from odegrad.core.tensor import Tensor, as_tensor
from odegrad.dynamics.base import DynamicsFunc, VjpResult
from odegrad.dynamics.layers import Mlp
from odegrad.solvers.config import SolveConfig, Trajectory
from odegrad.solvers.integrate import DEFAULT_CONFIG, solve_at_times

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PoissonRateModel:
    """Intensity lambda(z) = softplus(MLP(z)), strictly positive."""

    dim: int
    theta: Tensor
    hidden: int = 16

    def __post_init__(self) -> None:
        theta = np.array(self.theta, dtype=np.float64).ravel()
        if theta.shape != (self.net.param_count,):
            raise DimensionError("rate model parameters", (self.net.param_count,), theta.shape)
        object.__setattr__(self, "theta", theta)

    @property
    def net(self) -> Mlp:
        return Mlp((self.dim, self.hidden, 1), "tanh", output_activation="softplus")

    @property
    def param_count(self) -> int:
        return self.net.param_count

    @classmethod
    def init(cls, dim: int, rng: RngState, hidden: int = 16) -> "PoissonRateModel":
        return cls(dim, Mlp((dim, hidden, 1)).init_theta(rng), hidden)

    @classmethod
    def constant(cls, dim: int, rate: float, hidden: int = 16) -> "PoissonRateModel":
        """Zero weights with the output bias chosen so that lambda == rate everywhere."""
        if rate <= 0:
            raise ArgumentError(f"rate must be > 0, got {rate}")
        theta = np.zeros(Mlp((dim, hidden, 1)).param_count)
        theta[-1] = softplus_inverse(rate)
        return cls(dim, theta, hidden)

    def with_theta(self, theta: Tensor) -> "PoissonRateModel":
        return replace(self, theta=theta)

    def rate(self, z: Tensor) -> Tensor:
        """lambda per row of z[n, D]."""
        return self.net(self.theta, np.atleast_2d(z))[:, 0]

    def rate_vjp(self, z: Tensor, g: Tensor) -> tuple[Tensor, Tensor]:
        """Products of per-row weights g with d lambda / dz and d lambda / dtheta."""
        _, cache = self.net.forward(self.theta, np.atleast_2d(z))
        return self.net.backward(self.theta, cache, np.asarray(g, dtype=np.float64)[:, None])


@dataclass(frozen=True, eq=False)
class IntensityDynamics(DynamicsFunc):
    """Latent dynamics extended with the running integral: d/dt [z, Lambda] = [f(z, t), lambda(z)].

    theta is [f.theta, rate.theta].
    """

    tag = "intensity"

    base: DynamicsFunc | None = None
    rate_model: PoissonRateModel | None = None

    @classmethod
    def wrap(cls, base: DynamicsFunc, rate: PoissonRateModel) -> "IntensityDynamics":
        return cls(base.dim + 1, np.concatenate([base.theta, rate.theta]), base, rate)

    @property
    def param_count(self) -> int:
        return self.base.param_count + self.rate_model.param_count

    @property
    def time_dependent(self) -> bool:
        return self.base.time_dependent

    def with_theta(self, theta: Tensor) -> "IntensityDynamics":
        k = self.base.param_count
        return replace(
            self,
            theta=theta,
            base=self.base.with_theta(theta[:k]),
            rate_model=self.rate_model.with_theta(theta[k:]),
        )

    def _eval(self, state: Tensor, t: float) -> Tensor:
        z = state[:, :-1]
        return np.hstack([self.base._eval(z, t), self.rate_model.rate(z)[:, None]])

    def _vjp(self, state: Tensor, t: float, a: Tensor) -> VjpResult:
        z = state[:, :-1]
        dynamics = self.base._vjp(z, t, a[:, :-1])
        grad_z, grad_rate = self.rate_model.rate_vjp(z, a[:, -1])
        vjp_z = np.hstack([dynamics.vjp_z + grad_z, np.zeros((z.shape[0], 1))])
        return VjpResult(vjp_z, np.concatenate([dynamics.vjp_theta, grad_rate]), dynamics.vjp_t)


@dataclass(frozen=True)
class PoissonResult:
    """Log-likelihood with gradients for z0, the dynamics and the rate network."""

    value: float
    integral: float
    d_z0: Tensor
    d_theta_dynamics: Tensor
    d_theta_rate: Tensor
    nfe_forward: int
    nfe_backward: int


def _event_grid(
    event_times: Tensor, t_start: float, t_end: float
) -> tuple[Tensor, Tensor]:
    if not t_start < t_end:
        raise ArgumentError(f"poisson_loglik: need t_start < t_end, got [{t_start}, {t_end}]")
    if len(event_times) and (event_times.min() < t_start or event_times.max() > t_end):
        raise ArgumentError(f"poisson_loglik: events must lie in [{t_start}, {t_end}]")
    if np.any(np.diff(event_times) < 0):
        raise ArgumentError("poisson_loglik: event times must be ascending")
    grid = np.unique(np.concatenate([[t_start, t_end], event_times]))
    return grid, np.searchsorted(grid, event_times)


def _forward(
    f: DynamicsFunc,
    rate: PoissonRateModel,
    z0: Tensor,
    event_times: Tensor,
    t_start: float,
    t_end: float,
    cfg: SolveConfig,
) -> tuple[IntensityDynamics, Trajectory, Tensor, Tensor]:
    grid, positions = _event_grid(event_times, t_start, t_end)
    dynamics = IntensityDynamics.wrap(f, rate)
    state0 = np.concatenate([as_tensor(z0), [0.0]])
    trajectory = solve_at_times(dynamics, state0, grid, cfg)
    return dynamics, trajectory, positions, trajectory.states[positions, :-1]


def poisson_loglik(
    rate: PoissonRateModel,
    f: DynamicsFunc,
    z0: Tensor,
    event_times: Tensor,
    t_start: float,
    t_end: float,
    cfg: SolveConfig = DEFAULT_CONFIG,
) -> float:
    """sum_i log lambda(z(t_i)) - integral of lambda(z(t)) over [t_start, t_end].

    The integral is an extra coordinate of one ODE solve through every event time.

    Raises:
        ArgumentError: If events fall outside the interval or are not ascending
    """
    return poisson_loglik_and_grad(
        rate, f, z0, event_times, t_start, t_end, cfg, with_grad=False
    ).value


def poisson_loglik_and_grad(
    rate: PoissonRateModel,
    f: DynamicsFunc,
    z0: Tensor,
    event_times: Tensor,
    t_start: float,
    t_end: float,
    cfg: SolveConfig = DEFAULT_CONFIG,
    with_grad: bool = True,
) -> PoissonResult:
    """Log-likelihood and its gradients through the multi-observation adjoint."""
    event_times = as_tensor(event_times).ravel()
    dynamics, trajectory, positions, z_events = _forward(
        f, rate, z0, event_times, t_start, t_end, cfg
    )
    integral = float(trajectory.states[-1, -1])
    lam = rate.rate(z_events) if len(event_times) else np.zeros(0)
    value = float(np.sum(np.log(lam))) - integral
    if not with_grad:
        empty = np.zeros(0)
        return PoissonResult(value, integral, empty, empty, empty, trajectory.nfe, 0)

    seeds = np.zeros_like(trajectory.states)
    seeds[-1, -1] = -1.0
    grad_rate_direct = np.zeros(rate.param_count)
    if len(event_times):
        grad_z, grad_rate_direct = rate.rate_vjp(z_events, 1.0 / lam)
        np.add.at(seeds[:, :-1], positions, grad_z)
    bundle = backward_gradients_multi(dynamics, trajectory, list(seeds), cfg)
    k = f.param_count
    return PoissonResult(
        value,
        integral,
        bundle.d_z0[:-1],
        bundle.d_theta[:k],
        bundle.d_theta[k:] + grad_rate_direct,
        trajectory.nfe,
        bundle.nfe,
    )


def rate_curve(
    rate: PoissonRateModel,
    f: DynamicsFunc,
    z0: Tensor,
    times: Tensor,
    cfg: SolveConfig = DEFAULT_CONFIG,
) -> Tensor:
    """lambda(z(t)) at ascending times, the first of which is z0's time."""
    trajectory = solve_at_times(f, z0, times, cfg)
    return rate.rate(trajectory.states)


def homogeneous_events(rng: RngState, rate: float, t_start: float, t_end: float) -> Tensor:
    """Event times of a constant-rate process from exponential inter-arrival times."""
    if rate <= 0:
        return np.zeros(0)
    events = []
    t = t_start + float(rng.exponential(1.0 / rate, 1)[0])
    while t <= t_end:
        events.append(t)
        t += float(rng.exponential(1.0 / rate, 1)[0])
    return np.asarray(events)


def sinusoidal_rate(t: Tensor, base: float, amplitude: float, period: float) -> Tensor:
    return base + amplitude * np.sin(2.0 * np.pi * np.asarray(t) / period)


def sinusoidal_events(
    rng: RngState,
    base: float,
    amplitude: float,
    period: float,
    t_start: float,
    t_end: float,
) -> Tensor:
    """Events of rate base + amplitude sin(2 pi t / period) by thinning.

    Raises:
        ArgumentError: If the rate can become negative
    """
    if abs(amplitude) > base:
        raise ArgumentError(f"sinusoidal rate needs |amplitude| <= base, got {amplitude} > {base}")
    peak = base + abs(amplitude)
    candidates = homogeneous_events(rng, peak, t_start, t_end)
    keep = rng.uniform(0.0, 1.0, len(candidates)) * peak <= sinusoidal_rate(
        candidates, base, amplitude, period
    )
    return candidates[keep]


def softplus_inverse(rate: float) -> float:
    return float(np.log(np.expm1(rate)))
