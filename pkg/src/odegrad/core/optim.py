"""First-order optimizers used by every training loop."""

from dataclasses import dataclass, replace
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from odegrad.core.exceptions import DimensionError
from odegrad.core.tensor import Tensor, as_tensor, check_finite

# Constants
DEFAULT_ADAM_LR = 1e-3
DEFAULT_ADAM_BETA1 = 0.9
DEFAULT_ADAM_BETA2 = 0.999
DEFAULT_EPS = 1e-8
DEFAULT_RMSPROP_LR = 1e-4
DEFAULT_RMSPROP_DECAY = 0.99


class OptimizerConfig(BaseModel):
    """Optimizer choice and hyperparameters."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    name: Literal["adam", "rmsprop"] = "adam"
    lr: float | None = Field(default=None, gt=0)
    beta1: float = Field(default=DEFAULT_ADAM_BETA1, ge=0, lt=1)
    beta2: float = Field(default=DEFAULT_ADAM_BETA2, ge=0, lt=1)
    decay: float = Field(default=DEFAULT_RMSPROP_DECAY, ge=0, lt=1)
    eps: float = Field(default=DEFAULT_EPS, gt=0)

    @property
    def learning_rate(self) -> float:
        if self.lr is not None:
            return self.lr
        return DEFAULT_ADAM_LR if self.name == "adam" else DEFAULT_RMSPROP_LR


@dataclass(frozen=True)
class AdamState:
    """Adam moment accumulators and hyperparameters."""

    step: int
    m: Tensor
    v: Tensor
    lr: float = DEFAULT_ADAM_LR
    beta1: float = DEFAULT_ADAM_BETA1
    beta2: float = DEFAULT_ADAM_BETA2
    eps: float = DEFAULT_EPS

    @classmethod
    def init(cls, theta: Tensor, **hyper: float) -> "AdamState":
        shape = np.shape(theta)
        return cls(step=0, m=np.zeros(shape), v=np.zeros(shape), **hyper)


@dataclass(frozen=True)
class RMSpropState:
    """RMSprop squared-gradient accumulator and hyperparameters."""

    step: int
    sq: Tensor
    lr: float = DEFAULT_RMSPROP_LR
    decay: float = DEFAULT_RMSPROP_DECAY
    eps: float = DEFAULT_EPS

    @classmethod
    def init(cls, theta: Tensor, **hyper: float) -> "RMSpropState":
        return cls(step=0, sq=np.zeros(np.shape(theta)), **hyper)


OptimizerState = AdamState | RMSpropState


def _check_shapes(name: str, accumulator: Tensor, theta: Tensor, grad: Tensor) -> None:
    if np.shape(grad) != np.shape(theta):
        raise DimensionError(name, np.shape(theta), np.shape(grad))
    if np.shape(accumulator) != np.shape(theta):
        raise DimensionError(name, np.shape(accumulator), np.shape(theta))


def adam_step(state: AdamState, theta: Tensor, grad: Tensor) -> tuple[AdamState, Tensor]:
    """One bias-corrected Adam update.

    Returns:
        Tuple of (updated state, updated parameters)
    """
    theta = as_tensor(theta)
    grad = check_finite(as_tensor(grad), "adam_step")
    _check_shapes("adam_step", state.m, theta, grad)

    step = state.step + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * grad
    v = state.beta2 * state.v + (1.0 - state.beta2) * grad * grad
    m_hat = m / (1.0 - state.beta1**step)
    v_hat = v / (1.0 - state.beta2**step)
    new_theta = theta - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return replace(state, step=step, m=m, v=v), new_theta


def rmsprop_step(state: RMSpropState, theta: Tensor, grad: Tensor) -> tuple[RMSpropState, Tensor]:
    """One RMSprop update."""
    theta = as_tensor(theta)
    grad = check_finite(as_tensor(grad), "rmsprop_step")
    _check_shapes("rmsprop_step", state.sq, theta, grad)

    sq = state.decay * state.sq + (1.0 - state.decay) * grad * grad
    new_theta = theta - state.lr * grad / (np.sqrt(sq) + state.eps)
    return replace(state, step=state.step + 1, sq=sq), new_theta


def init_optimizer(config: OptimizerConfig, theta: Tensor) -> OptimizerState:
    """Create the optimizer state described by config for parameters theta."""
    if config.name == "adam":
        return AdamState.init(
            theta, lr=config.learning_rate, beta1=config.beta1, beta2=config.beta2, eps=config.eps
        )
    return RMSpropState.init(theta, lr=config.learning_rate, decay=config.decay, eps=config.eps)


def optimizer_step(
    state: OptimizerState, theta: Tensor, grad: Tensor
) -> tuple[OptimizerState, Tensor]:
    """Dispatch to the update rule matching the state type."""
    if isinstance(state, AdamState):
        return adam_step(state, theta, grad)
    return rmsprop_step(state, theta, grad)
