"""Continuous normalizing flows."""

from odegrad.cnf.datasets import (
    Dataset2D,
    GaussianMixture,
    default_mixture,
    get_dataset,
    make_dataset,
    standard_normal,
    two_circles,
    two_moons,
)
from odegrad.cnf.density import (
    density_grid,
    flow_snapshots,
    forward_sample,
    log_density,
    pull_back,
    push_forward,
)
from odegrad.cnf.losses import (
    LossResult,
    kl_density_matching_loss,
    kl_loss_and_grad,
    mle_loss,
    mle_loss_and_grad,
)
from odegrad.cnf.model import (
    CnfModel,
    FlowDynamics,
    FlowState,
    flow_dynamics,
    standard_normal_logpdf,
)
from odegrad.cnf.planar_nf import PlanarFlow, planar_kl_loss_and_grad, train_planar_nf
from odegrad.cnf.training import (
    TRAINING_LOG_HEADER,
    CnfTrainingResult,
    TrainingRecord,
    train_cnf,
)

__all__ = [
    "TRAINING_LOG_HEADER",
    "CnfModel",
    "CnfTrainingResult",
    "Dataset2D",
    "FlowDynamics",
    "FlowState",
    "GaussianMixture",
    "LossResult",
    "PlanarFlow",
    "TrainingRecord",
    "default_mixture",
    "density_grid",
    "flow_dynamics",
    "flow_snapshots",
    "forward_sample",
    "get_dataset",
    "kl_density_matching_loss",
    "kl_loss_and_grad",
    "log_density",
    "make_dataset",
    "mle_loss",
    "mle_loss_and_grad",
    "planar_kl_loss_and_grad",
    "pull_back",
    "push_forward",
    "standard_normal",
    "standard_normal_logpdf",
    "train_cnf",
    "train_planar_nf",
    "two_circles",
    "two_moons",
]
