"""Tensor arithmetic, random state, optimizers, logging and exceptions."""

from odegrad.core.exceptions import (
    ArgumentError,
    CheckFailure,
    DimensionError,
    DivergenceError,
    NonFiniteError,
    NumericDomainError,
    OdegradError,
    ReversalWarning,
    TrainingDivergenceError,
)
from odegrad.core.log import VERBOSE
from odegrad.core.optim import (
    AdamState,
    OptimizerConfig,
    RMSpropState,
    adam_step,
    init_optimizer,
    optimizer_step,
    rmsprop_step,
)
from odegrad.core.rng import RngState, gaussian_sample
from odegrad.core.tensor import Tensor, as_tensor, check_finite, elementwise, matmul

__all__ = [
    "AdamState",
    "ArgumentError",
    "CheckFailure",
    "DimensionError",
    "DivergenceError",
    "NonFiniteError",
    "NumericDomainError",
    "OdegradError",
    "OptimizerConfig",
    "RMSpropState",
    "ReversalWarning",
    "RngState",
    "Tensor",
    "TrainingDivergenceError",
    "VERBOSE",
    "adam_step",
    "as_tensor",
    "check_finite",
    "elementwise",
    "gaussian_sample",
    "init_optimizer",
    "matmul",
    "optimizer_step",
    "rmsprop_step",
]
