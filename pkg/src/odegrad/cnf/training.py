"""Training loops for continuous normalizing flows."""

import logging
from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from odegrad.cnf.datasets import Dataset2D
from odegrad.cnf.losses import LossResult, kl_loss_and_grad, mle_loss_and_grad
from odegrad.cnf.model import CnfModel
from odegrad.core.exceptions import ArgumentError, TrainingDivergenceError
from odegrad.core.optim import OptimizerConfig, init_optimizer, optimizer_step
from odegrad.core.rng import RngState, gaussian_sample
from odegrad.core.tensor import Tensor
from odegrad.solvers.config import SolveConfig
from odegrad.solvers.integrate import DEFAULT_CONFIG

logger = logging.getLogger(__name__)

CnfTask = Literal["density_matching", "mle"]
TRAINING_LOG_HEADER = ("iter", "loss", "nfe_forward", "nfe_backward")


@dataclass(frozen=True)
class TrainingRecord:
    iter: int
    loss: float
    nfe_forward: int
    nfe_backward: int

    def as_row(self) -> tuple:
        return (self.iter, self.loss, self.nfe_forward, self.nfe_backward)


@dataclass
class CnfTrainingResult:
    """Trained model and its per-iteration training log."""

    model: CnfModel
    log: list[TrainingRecord] = field(default_factory=list)

    @property
    def losses(self) -> list[float]:
        return [record.loss for record in self.log]


def _check_task(model: CnfModel, task: str, dataset: Dataset2D | Tensor) -> None:
    if task == "density_matching":
        if not isinstance(dataset, Dataset2D) or not dataset.has_density:
            raise ArgumentError("density_matching needs a dataset with an exact density")
        if dataset.dim != model.dim:
            raise ArgumentError(f"target has dimension {dataset.dim}, model {model.dim}")
    elif task != "mle":
        raise ArgumentError(f"unknown CNF task {task!r}; expected density_matching or mle")


def _mle_batch(dataset: Dataset2D | Tensor, rng: RngState, batch_size: int) -> Tensor:
    if isinstance(dataset, Dataset2D):
        return dataset.sample(rng, batch_size)
    data = np.asarray(dataset, dtype=np.float64)
    if batch_size >= len(data):
        return data
    return data[rng.choice(len(data), batch_size)]


def train_cnf(
    model: CnfModel,
    task: CnfTask,
    dataset: Dataset2D | Tensor,
    iters: int,
    optimizer: OptimizerConfig,
    rng: RngState,
    batch_size: int = 100,
    cfg: SolveConfig = DEFAULT_CONFIG,
    on_iteration: Callable[[TrainingRecord], None] | None = None,
) -> CnfTrainingResult:
    """Fit a CNF by density matching (KL to an exact target) or maximum likelihood.

    Args:
        model: Flow to train; its dynamics need a closed-form trace gradient
        task: density_matching or mle
        dataset: Target with exact density (density_matching), or a sampler / fixed
            array of points (mle)
        iters: Number of optimizer steps
        optimizer: Optimizer settings
        rng: Random state for base samples and minibatches
        batch_size: Samples per iteration
        cfg: Solver settings for forward and adjoint solves
        on_iteration: Called with every training record

    Returns:
        CnfTrainingResult with the final model and the training log

    Raises:
        TrainingDivergenceError: If a loss becomes non-finite
    """
    _check_task(model, task, dataset)
    logger.info(f"Training CNF ({task}, {model.dynamics.tag}) for {iters} iterations")
    state = init_optimizer(optimizer, model.theta)
    result = CnfTrainingResult(model)

    for it in range(iters):
        if task == "density_matching":
            z0 = gaussian_sample(rng, (batch_size, model.dim))
            loss: LossResult = kl_loss_and_grad(model, dataset, z0, cfg)
        else:
            loss = mle_loss_and_grad(model, _mle_batch(dataset, rng, batch_size), cfg)
        if not np.isfinite(loss.value) or not np.all(np.isfinite(loss.grad)):
            raise TrainingDivergenceError(it, loss.value)

        state, theta = optimizer_step(state, model.theta, loss.grad)
        model = model.with_theta(theta)
        record = TrainingRecord(it, loss.value, loss.nfe_forward, loss.nfe_backward)
        result.log.append(record)
        logger.verbose(
            f"iter {it}: loss={loss.value:.6f} nfe_f={loss.nfe_forward} nfe_b={loss.nfe_backward}"
        )
        if on_iteration is not None:
            on_iteration(record)

    result.model = model
    return result
