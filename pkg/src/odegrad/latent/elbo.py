"""Single-sample evidence lower bound of the latent ODE and its gradient."""

from dataclasses import dataclass

import numpy as np

from odegrad.adjoint.gradients import backward_gradients_multi
from odegrad.core.exceptions import ArgumentError
from odegrad.core.rng import RngState, gaussian_sample
from odegrad.core.tensor import Tensor, as_tensor
from odegrad.latent.model import (
    LatentOdeModel,
    decode_states,
    encode_backward,
    encode_with_cache,
    latent_trajectory,
)
from odegrad.latent.spirals import IrregularDataset
from odegrad.solvers.config import SolveConfig
from odegrad.solvers.integrate import DEFAULT_CONFIG

LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class ElboResult:
    """Batch-mean ELBO, its gradient with respect to every model parameter and its parts."""

    value: float
    grad: Tensor
    log_likelihood: float
    kl: float
    nfe_forward: int
    nfe_backward: int


def gaussian_kl(mu: Tensor, sigma: Tensor) -> Tensor:
    """KL(N(mu, diag sigma^2) || N(0, I)) summed over the last axis."""
    return np.sum(0.5 * (mu**2 + sigma**2 - 1.0) - np.log(sigma), axis=-1)


def union_grid(times: Tensor, t0: float) -> tuple[Tensor, Tensor]:
    """Sorted union of all observation times and t0.

    Returns:
        Tuple of (grid, position of every observation on the grid, same shape as times)
    """
    grid = np.unique(np.concatenate([[t0], np.ravel(times)]))
    return grid, np.searchsorted(grid, times)


def elbo_and_grad(
    model: LatentOdeModel,
    data: IrregularDataset,
    eps: Tensor,
    cfg: SolveConfig = DEFAULT_CONFIG,
    with_grad: bool = True,
) -> ElboResult:
    """ELBO for fixed reparameterization noise eps[n, L].

    Every trajectory is integrated on the union of the batch's observation times,
    starting from z0 at model.t0; times a trajectory does not observe contribute no loss.
    """
    obs, times = as_tensor(data.observations), as_tensor(data.times)
    n = obs.shape[0]
    if model.t0 > np.min(times):
        raise ArgumentError(f"elbo: model t0={model.t0} is after the first observation")

    mu, log_sigma, enc_cache = encode_with_cache(model, obs, times)
    sigma = np.exp(log_sigma)
    z0 = mu + sigma * eps
    grid, positions = union_grid(times, model.t0)
    trajectory = latent_trajectory(model, z0, grid, cfg)
    rows = np.arange(n)[:, None]
    z_obs = trajectory.states[positions, rows]
    x_hat, dec_cache = decode_states(model, z_obs)

    noise = model.noise_std
    residual = (obs - x_hat) / noise
    log_lik = -0.5 * residual**2 - np.log(noise) - 0.5 * LOG_2PI
    kl = gaussian_kl(mu, sigma)
    value = float(np.mean(log_lik.sum(axis=(1, 2)) - kl))
    mean_log_lik = float(np.mean(log_lik.sum(axis=(1, 2))))
    if not with_grad:
        return ElboResult(
            value, np.zeros(model.param_count), mean_log_lik, float(kl.mean()), trajectory.nfe, 0
        )

    w = 1.0 / n
    grad_log_noise = w * np.sum(residual**2 - 1.0)
    grad_x_hat = (w * residual / noise).reshape(-1, model.obs_dim)
    grad_z_obs, grad_decoder = model.decoder.backward(model.part("decoder"), dec_cache, grad_x_hat)

    grad_states = np.zeros((len(grid), n, model.latent_dim))
    np.add.at(grad_states, (positions, rows), grad_z_obs.reshape(z_obs.shape))
    if len(grid) > 1:
        bundle = backward_gradients_multi(model.dynamics, trajectory, list(grad_states), cfg)
        grad_z0, grad_dynamics, nfe_backward = bundle.d_z0, bundle.d_theta, bundle.nfe
    else:
        grad_z0, nfe_backward = grad_states[0], 0
        grad_dynamics = np.zeros(model.dynamics.param_count)

    grad_mu = grad_z0 - w * mu
    grad_log_sigma = grad_z0 * sigma * eps - w * (sigma**2 - 1.0)
    grad_encoder, grad_head = encode_backward(model, enc_cache, grad_mu, grad_log_sigma)
    grad = model.pack(
        {
            "encoder": grad_encoder,
            "head": grad_head,
            "dynamics": grad_dynamics,
            "decoder": grad_decoder,
            "log_noise": [grad_log_noise],
        }
    )
    return ElboResult(value, grad, mean_log_lik, float(kl.mean()), trajectory.nfe, nfe_backward)


def elbo(
    model: LatentOdeModel,
    observations: Tensor,
    times: Tensor,
    rng: RngState,
    cfg: SolveConfig = DEFAULT_CONFIG,
) -> float:
    """Reparameterized single-sample ELBO, averaged over a batch of sequences.

    Args:
        model: Latent ODE
        observations: (k, obs_dim) or a batch (n, k, obs_dim)
        times: (k,) or (n, k), ascending
        rng: Random state for the reparameterization noise
        cfg: Solver settings
    """
    observations, times = as_tensor(observations), as_tensor(times)
    if observations.ndim == 2:
        observations, times = observations[None], times[None]
    data = IrregularDataset(times, observations, np.zeros(times.shape, dtype=int))
    eps = gaussian_sample(rng, (observations.shape[0], model.latent_dim))
    return elbo_and_grad(model, data, eps, cfg, with_grad=False).value
