"""Density-matching and maximum-likelihood losses with adjoint gradients."""

from dataclasses import dataclass

import numpy as np

from odegrad.adjoint.gradients import backward_gradients
from odegrad.cnf.datasets import Dataset2D
from odegrad.cnf.density import pull_back, push_forward
from odegrad.cnf.model import CnfModel, FlowState, standard_normal_logpdf
from odegrad.core.exceptions import ArgumentError
from odegrad.core.rng import RngState, gaussian_sample
from odegrad.core.tensor import Tensor
from odegrad.solvers.config import SolveConfig
from odegrad.solvers.integrate import DEFAULT_CONFIG


@dataclass(frozen=True)
class LossResult:
    """Scalar loss, its parameter gradient and the solver cost of computing both."""

    value: float
    grad: Tensor
    nfe_forward: int
    nfe_backward: int


def kl_loss_and_grad(
    model: CnfModel,
    target: Dataset2D,
    z0: Tensor,
    cfg: SolveConfig = DEFAULT_CONFIG,
    with_grad: bool = True,
) -> LossResult:
    """Reparameterized KL(q || p) estimate from fixed base samples z0[n, D].

    Equals mean(log q(z1) - log p(z1)) for z1 the pushed-forward samples; reusing z0
    across calls gives common random numbers.
    """
    if not target.has_density:
        raise ArgumentError(f"density matching needs a target density; {target.name} has none")
    n = z0.shape[0]
    end, forward = push_forward(model, z0, cfg)
    logq = standard_normal_logpdf(z0) + end.delta_logp
    value = float(np.mean(logq - target.log_prob(end.z)))
    if not with_grad:
        return LossResult(value, np.zeros(model.dynamics.param_count), forward.nfe, 0)

    seed = FlowState(-target.score(end.z) / n, np.full(n, 1.0 / n)).pack()
    start = FlowState(z0, np.zeros(n)).pack()
    bundle = backward_gradients(model.flow, end.pack(), model.t0, model.t1, seed, cfg, z0=start)
    return LossResult(value, bundle.d_theta, forward.nfe, bundle.nfe)


def kl_density_matching_loss(
    model: CnfModel, target: Dataset2D, rng: RngState, n: int, cfg: SolveConfig = DEFAULT_CONFIG
) -> float:
    """Monte-Carlo KL(q || p) up to a constant, from n fresh base samples."""
    if n < 1:
        raise ArgumentError(f"kl_density_matching_loss: n must be >= 1, got {n}")
    z0 = gaussian_sample(rng, (n, model.dim))
    return kl_loss_and_grad(model, target, z0, cfg, with_grad=False).value


def mle_loss_and_grad(
    model: CnfModel, batch: Tensor, cfg: SolveConfig = DEFAULT_CONFIG, with_grad: bool = True
) -> LossResult:
    """Negative mean log-likelihood of batch[n, D] and its parameter gradient."""
    n = batch.shape[0]
    end, forward = pull_back(model, batch, cfg)
    value = float(-np.mean(standard_normal_logpdf(end.z) - end.delta_logp))
    if not with_grad:
        return LossResult(value, np.zeros(model.dynamics.param_count), forward.nfe, 0)

    # Loss = mean(-log N(z0) + delta) over the t1 -> t0 solve
    seed = FlowState(end.z / n, np.full(n, 1.0 / n)).pack()
    start = FlowState(batch, np.zeros(n)).pack()
    bundle = backward_gradients(model.flow, end.pack(), model.t1, model.t0, seed, cfg, z0=start)
    return LossResult(value, bundle.d_theta, forward.nfe, bundle.nfe)


def mle_loss(model: CnfModel, batch: Tensor, cfg: SolveConfig = DEFAULT_CONFIG) -> float:
    """-mean(log_density(batch))."""
    return mle_loss_and_grad(model, batch, cfg, with_grad=False).value
