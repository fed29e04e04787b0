"""Fit a latent ODE intensity model to synthetic event times by maximum likelihood."""

import logging
from dataclasses import dataclass

import numpy as np

from odegrad.core.exceptions import TrainingDivergenceError
from odegrad.core.optim import init_optimizer, optimizer_step
from odegrad.core.rng import RngState, gaussian_sample
from odegrad.core.tensor import Tensor
from odegrad.dynamics.architectures import MlpDynamics, build_mlp_dynamics
from odegrad.experiments.config import PoissonConfig
from odegrad.experiments.plots import Series, emit_svg
from odegrad.experiments.writer import RunWriter
from odegrad.latent.poisson import (
    PoissonRateModel,
    homogeneous_events,
    poisson_loglik_and_grad,
    rate_curve,
    sinusoidal_events,
    sinusoidal_rate,
)
from odegrad.solvers.config import SolveConfig

logger = logging.getLogger(__name__)

T_START = 0.0
INITIAL_STATE_STD = 0.5


@dataclass(frozen=True)
class PoissonFit:
    z0: Tensor
    dynamics: MlpDynamics
    rate: PoissonRateModel
    log_likelihood: float

    def curve(self, times: Tensor, cfg: SolveConfig) -> Tensor:
        return rate_curve(self.rate, self.dynamics, self.z0, times, cfg)


def make_events(config: PoissonConfig, rng: RngState) -> Tensor:
    match config.process:
        case "homogeneous":
            return homogeneous_events(rng, config.rate, T_START, config.duration)
        case "sinusoidal":
            return sinusoidal_events(
                rng, config.rate, config.amplitude, config.period, T_START, config.duration
            )
    return np.zeros(0)


def true_rate(config: PoissonConfig, times: Tensor) -> Tensor:
    match config.process:
        case "homogeneous":
            return np.full(len(times), config.rate)
        case "sinusoidal":
            return sinusoidal_rate(times, config.rate, config.amplitude, config.period)
    return np.zeros(len(times))


def fit_intensity(
    events: Tensor, config: PoissonConfig, rng: RngState, writer: RunWriter | None = None
) -> PoissonFit:
    """Adam ascent on the log-likelihood over z0, the latent dynamics and the rate network.

    Raises:
        TrainingDivergenceError: If the log-likelihood becomes non-finite
    """
    cfg = config.solve_config()
    f = build_mlp_dynamics(config.latent_dim, [config.dyn_hidden], rng, time_dependent=False)
    rate = PoissonRateModel.init(config.latent_dim, rng, config.rate_hidden)
    z0 = gaussian_sample(rng, config.latent_dim, std=INITIAL_STATE_STD)
    sizes = np.cumsum([config.latent_dim, f.param_count])
    params = np.concatenate([z0, f.theta, rate.theta])
    state = init_optimizer(config.optimizer("adam"), params)
    value = float("nan")

    for iteration in range(config.iters):
        z0, theta_f, theta_rate = np.split(params, sizes)
        f, rate = f.with_theta(theta_f), rate.with_theta(theta_rate)
        result = poisson_loglik_and_grad(rate, f, z0, events, T_START, config.duration, cfg)
        value = result.value
        grad = np.concatenate([result.d_z0, result.d_theta_dynamics, result.d_theta_rate])
        if not np.isfinite(value) or not np.all(np.isfinite(grad)):
            raise TrainingDivergenceError(iteration, -value)
        state, params = optimizer_step(state, params, -grad)
        if writer is not None:
            writer.log_metrics(
                iteration, loss=-value, nfe_f=result.nfe_forward, nfe_b=result.nfe_backward
            )
        logger.verbose(f"iter {iteration}: loglik={value:.6f} integral={result.integral:.6f}")

    z0, theta_f, theta_rate = np.split(params, sizes)
    return PoissonFit(z0, f.with_theta(theta_f), rate.with_theta(theta_rate), value)


def run_poisson(config: PoissonConfig, writer: RunWriter) -> float:
    """Generate events, fit the intensity model and plot lambda(t); returns the mean rate."""
    event_rng, model_rng = RngState(config.seed).spawn(2)
    events = make_events(config, event_rng)
    logger.info(
        f"Fitting {config.process} process: {len(events)} events on [0, {config.duration:g}]"
    )
    writer.write_table("events.csv", ("t",), ((t,) for t in events))

    fit = fit_intensity(events, config, model_rng, writer)
    times = np.linspace(T_START, config.duration, config.curve_points)
    curve = fit.curve(times, config.solve_config())
    reference = true_rate(config, times)
    writer.write_table("rate_curve.csv", ("t", "rate", "true_rate"), zip(times, curve, reference))
    mean_rate = float(np.mean(curve))
    writer.write_table(
        "fit.csv",
        ("events", "empirical_rate", "mean_rate", "log_likelihood"),
        [(len(events), len(events) / (config.duration - T_START), mean_rate, fit.log_likelihood)],
    )
    writer.write_svg(
        "rate.svg",
        emit_svg(
            [Series(times, curve, label="fitted"), Series(times, reference, label="true")],
            "line",
            title="Intensity",
            xlabel="t",
            ylabel="rate",
            rug=events,
        ),
    )
    logger.info(f"✓ Mean fitted rate {mean_rate:.4f} ({len(events)} events)")
    return mean_rate
