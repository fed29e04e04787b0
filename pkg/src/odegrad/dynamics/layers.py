"""Dense layers with hand-derived reverse-mode products.

Parameters live in one flat float64 vector; layer views are sliced out of it on every
call, so networks are immutable values and their gradients come back flat as well.
"""

from collections.abc import Callable
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.special import expit

from odegrad.core.exceptions import DimensionError
from odegrad.core.rng import RngState
from odegrad.core.tensor import Tensor

Activation = Literal["tanh", "relu", "sigmoid", "softplus", "identity"]


def _tanh_d1(x: Tensor, y: Tensor) -> Tensor:
    return 1.0 - y * y


def _tanh_d2(x: Tensor, y: Tensor) -> Tensor:
    return -2.0 * y * (1.0 - y * y)


def _sigmoid_d1(x: Tensor, y: Tensor) -> Tensor:
    return y * (1.0 - y)


@dataclass(frozen=True)
class ActivationFn:
    """Scalar nonlinearity with first and second derivatives.

    Derivatives take both the pre-activation x and the activation y = fn(x).
    """

    fn: Callable[[Tensor], Tensor]
    d1: Callable[[Tensor, Tensor], Tensor]
    d2: Callable[[Tensor, Tensor], Tensor]


ACTIVATIONS: dict[str, ActivationFn] = {
    "tanh": ActivationFn(np.tanh, _tanh_d1, _tanh_d2),
    "relu": ActivationFn(
        lambda x: np.maximum(x, 0.0),
        lambda x, y: (x > 0).astype(np.float64),
        lambda x, y: np.zeros_like(x),
    ),
    "sigmoid": ActivationFn(
        expit, _sigmoid_d1, lambda x, y: y * (1.0 - y) * (1.0 - 2.0 * y)
    ),
    "softplus": ActivationFn(
        lambda x: np.logaddexp(0.0, x),
        lambda x, y: expit(x),
        lambda x, y: expit(x) * (1.0 - expit(x)),
    ),
    "identity": ActivationFn(
        lambda x: x, lambda x, y: np.ones_like(x), lambda x, y: np.zeros_like(x)
    ),
}


def get_activation(name: str) -> ActivationFn:
    try:
        return ACTIVATIONS[name]
    except KeyError:
        raise DimensionError("activation", sorted(ACTIVATIONS), name) from None


@dataclass(frozen=True)
class MlpCache:
    """Intermediate values of one forward pass, consumed by ``Mlp.backward``."""

    inputs: list[Tensor]
    pre: list[Tensor]
    post: list[Tensor]


@dataclass(frozen=True)
class Mlp:
    """Fully connected network x -> y with a hidden activation and an output activation.

    Parameter layout: for every layer, W (out x in, row-major) followed by b (out).
    Inputs are batches of shape (n, sizes[0]).
    """

    sizes: tuple[int, ...]
    activation: Activation = "tanh"
    output_activation: Activation = "identity"

    def __post_init__(self) -> None:
        if len(self.sizes) < 2 or min(self.sizes) < 1:
            raise DimensionError("Mlp", "at least two layer sizes >= 1", self.sizes)

    @property
    def param_count(self) -> int:
        return sum(n_in * n_out + n_out for n_in, n_out in zip(self.sizes[:-1], self.sizes[1:]))

    def unpack(self, theta: Tensor) -> list[tuple[Tensor, Tensor]]:
        """Slice theta into (W, b) views per layer."""
        if theta.shape != (self.param_count,):
            raise DimensionError("Mlp.unpack", (self.param_count,), theta.shape)
        layers = []
        offset = 0
        for n_in, n_out in zip(self.sizes[:-1], self.sizes[1:]):
            w = theta[offset : offset + n_in * n_out].reshape(n_out, n_in)
            offset += n_in * n_out
            b = theta[offset : offset + n_out]
            offset += n_out
            layers.append((w, b))
        return layers

    def init_theta(self, rng: RngState | None, zero: bool = False) -> Tensor:
        """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases.

        With zero=True (or no rng) every parameter is zero.
        """
        if zero or rng is None:
            return np.zeros(self.param_count)
        chunks = []
        for n_in, n_out in zip(self.sizes[:-1], self.sizes[1:]):
            bound = 1.0 / np.sqrt(n_in)
            chunks.append(rng.uniform(-bound, bound, n_in * n_out))
            chunks.append(rng.uniform(-bound, bound, n_out))
        return np.concatenate(chunks)

    def forward(self, theta: Tensor, x: Tensor) -> tuple[Tensor, MlpCache]:
        """Evaluate the network on a batch x of shape (n, sizes[0])."""
        if x.ndim != 2 or x.shape[1] != self.sizes[0]:
            raise DimensionError("Mlp.forward", f"(n, {self.sizes[0]})", x.shape)
        layers = self.unpack(theta)
        inputs, pre, post = [], [], []
        h = x
        for i, (w, b) in enumerate(layers):
            act = get_activation(
                self.output_activation if i == len(layers) - 1 else self.activation
            )
            inputs.append(h)
            s = h @ w.T + b
            h = act.fn(s)
            pre.append(s)
            post.append(h)
        return h, MlpCache(inputs, pre, post)

    def __call__(self, theta: Tensor, x: Tensor) -> Tensor:
        return self.forward(theta, x)[0]

    def backward(self, theta: Tensor, cache: MlpCache, grad_out: Tensor) -> tuple[Tensor, Tensor]:
        """Reverse-mode products for an output cotangent.

        Returns:
            Tuple of (gradient w.r.t. the input batch, gradient w.r.t. theta summed over batch)
        """
        layers = self.unpack(theta)
        grads: list[Tensor] = []
        g = grad_out
        for i in range(len(layers) - 1, -1, -1):
            w, _ = layers[i]
            act = get_activation(
                self.output_activation if i == len(layers) - 1 else self.activation
            )
            g = g * act.d1(cache.pre[i], cache.post[i])
            grads.append(g.sum(axis=0))
            grads.append((g.T @ cache.inputs[i]).ravel())
            g = g @ w
        return g, np.concatenate(grads[::-1])
