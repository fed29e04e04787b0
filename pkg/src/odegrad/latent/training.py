"""Variational training of the latent ODE."""

import logging
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

from odegrad.core.exceptions import TrainingDivergenceError
from odegrad.core.optim import OptimizerConfig, init_optimizer, optimizer_step
from odegrad.core.rng import RngState, gaussian_sample
from odegrad.core.tensor import Tensor
from odegrad.latent.elbo import elbo_and_grad, union_grid
from odegrad.latent.metrics import rmse
from odegrad.latent.model import LatentOdeModel, decode_trajectory, encode
from odegrad.latent.spirals import IrregularDataset
from odegrad.solvers.config import SolveConfig
from odegrad.solvers.integrate import DEFAULT_CONFIG

logger = logging.getLogger(__name__)

MONOTONE_CHECKPOINTS = 10


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    loss: float
    nfe_forward: int
    nfe_backward: int
    rmse: float


@dataclass
class LatentTrainingResult:
    model: LatentOdeModel
    log: list[EpochRecord] = field(default_factory=list)

    @property
    def losses(self) -> list[float]:
        return [record.loss for record in self.log]


def reconstruct(
    model: LatentOdeModel, data: IrregularDataset, cfg: SolveConfig = DEFAULT_CONFIG
) -> Tensor:
    """Decoded posterior-mean trajectories at each sequence's own observation times."""
    mu, _ = encode(model, data.observations, data.times)
    grid, positions = union_grid(data.times, model.t0)
    decoded = decode_trajectory(model, mu, grid, cfg)
    return decoded[positions, np.arange(data.n_traj)[:, None]]


def check_monotone_rmse(values: list[float]) -> bool:
    """Whether the first logged reconstruction errors decrease; warn if not."""
    head = values[:MONOTONE_CHECKPOINTS]
    if all(b < a for a, b in zip(head, head[1:])):
        return True
    logger.warning(
        f"Reconstruction RMSE did not decrease monotonically over the first {len(head)} epochs: "
        + ", ".join(f"{v:.4g}" for v in head)
    )
    return False


def train_latent_ode(
    model: LatentOdeModel,
    data: IrregularDataset,
    epochs: int,
    rng: RngState,
    optimizer: OptimizerConfig | None = None,
    batch_size: int = 50,
    cfg: SolveConfig = DEFAULT_CONFIG,
    on_epoch: Callable[[EpochRecord], None] | None = None,
) -> LatentTrainingResult:
    """Maximize the ELBO with minibatch Adam.

    Every epoch visits the trajectories in a fresh random order; the logged loss is the
    mean negative ELBO over the epoch's minibatches and rmse the reconstruction error on
    the training trajectories afterwards.

    Raises:
        TrainingDivergenceError: If the ELBO becomes non-finite
    """
    optimizer = optimizer or OptimizerConfig(lr=1e-2)
    state = init_optimizer(optimizer, model.theta)
    result = LatentTrainingResult(model)
    logger.info(
        f"Training latent ODE on {data.n_traj} trajectories x {data.n_obs} points "
        f"for {epochs} epochs"
    )

    for epoch in range(epochs):
        order = rng.choice(data.n_traj, data.n_traj)
        losses, nfe_f, nfe_b = [], 0, 0
        for start in range(0, data.n_traj, batch_size):
            batch = data.batch(order[start : start + batch_size])
            eps = gaussian_sample(rng, (batch.n_traj, model.latent_dim))
            out = elbo_and_grad(model, batch, eps, cfg)
            if not np.isfinite(out.value) or not np.all(np.isfinite(out.grad)):
                raise TrainingDivergenceError(epoch, -out.value, phase="epoch")
            # Ascend the ELBO
            state, theta = optimizer_step(state, model.theta, -out.grad)
            model = model.with_theta(theta)
            losses.append(-out.value)
            nfe_f += out.nfe_forward
            nfe_b += out.nfe_backward

        error = rmse(reconstruct(model, data, cfg), data.observations)
        record = EpochRecord(epoch, float(np.mean(losses)), nfe_f, nfe_b, error)
        result.log.append(record)
        logger.verbose(f"epoch {epoch}: -elbo={record.loss:.6f} rmse={record.rmse:.6f}")
        if on_epoch is not None:
            on_epoch(record)

    if len(result.log) > 1:
        check_monotone_rmse([record.rmse for record in result.log])
    result.model = model
    return result
