"""GRU recurrence with full backpropagation through time."""

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from odegrad.core.exceptions import DimensionError
from odegrad.core.rng import RngState
from odegrad.core.tensor import Tensor

GATES = ("update", "reset", "candidate")


@dataclass(frozen=True)
class GruCache:
    x: Tensor
    h: Tensor
    update: Tensor
    reset: Tensor
    candidate: Tensor


@dataclass(frozen=True)
class GruCell:
    """Gated recurrent unit.

    update = sigmoid(x Wu + h Uu + bu)
    reset = sigmoid(x Wr + h Ur + br)
    candidate = tanh(x Wc + (reset * h) Uc + bc)
    h' = (1 - update) * h + update * candidate

    Parameter layout: W (input x hidden), U (hidden x hidden), b (hidden) for each gate
    in the order update, reset, candidate.
    """

    input_dim: int
    hidden: int

    @property
    def _gate_size(self) -> int:
        return self.input_dim * self.hidden + self.hidden * self.hidden + self.hidden

    @property
    def param_count(self) -> int:
        return 3 * self._gate_size

    def unpack(self, theta: Tensor) -> dict[str, tuple[Tensor, Tensor, Tensor]]:
        if theta.shape != (self.param_count,):
            raise DimensionError("GruCell.unpack", (self.param_count,), theta.shape)
        i, h = self.input_dim, self.hidden
        gates = {}
        for k, name in enumerate(GATES):
            block = theta[k * self._gate_size : (k + 1) * self._gate_size]
            w = block[: i * h].reshape(i, h)
            u = block[i * h : i * h + h * h].reshape(h, h)
            gates[name] = (w, u, block[i * h + h * h :])
        return gates

    def init_theta(self, rng: RngState | None, zero: bool = False) -> Tensor:
        if zero or rng is None:
            return np.zeros(self.param_count)
        bound = 1.0 / np.sqrt(self.hidden)
        return rng.uniform(-bound, bound, self.param_count)

    def step(self, theta: Tensor, x: Tensor, h: Tensor) -> tuple[Tensor, GruCache]:
        """One recurrence step on batches x (n, input_dim) and h (n, hidden)."""
        g = self.unpack(theta)
        w, u, b = g["update"]
        update = expit(x @ w + h @ u + b)
        w, u, b = g["reset"]
        reset = expit(x @ w + h @ u + b)
        w, u, b = g["candidate"]
        candidate = np.tanh(x @ w + (reset * h) @ u + b)
        h_new = (1.0 - update) * h + update * candidate
        return h_new, GruCache(x, h, update, reset, candidate)

    def step_backward(
        self, theta: Tensor, cache: GruCache, grad_h_new: Tensor
    ) -> tuple[Tensor, Tensor, Tensor]:
        """Reverse-mode products of one step.

        Returns:
            Tuple of (grad x, grad previous h, grad theta)
        """
        g = self.unpack(theta)
        x, h = cache.x, cache.h
        grad_update = grad_h_new * (cache.candidate - h)
        grad_h = grad_h_new * (1.0 - cache.update)

        w_c, u_c, _ = g["candidate"]
        pre_c = grad_h_new * cache.update * (1.0 - cache.candidate**2)
        reset_h = cache.reset * h
        grad_reset_h = pre_c @ u_c.T
        grad_h += grad_reset_h * cache.reset
        grad_x = pre_c @ w_c.T

        pre_u = grad_update * cache.update * (1.0 - cache.update)
        pre_r = grad_reset_h * h * cache.reset * (1.0 - cache.reset)
        grads = {}
        inputs = {"update": (pre_u, h), "reset": (pre_r, h), "candidate": (pre_c, reset_h)}
        for name, (pre, h_in) in inputs.items():
            w, u, _ = g[name]
            grads[name] = np.concatenate([(x.T @ pre).ravel(), (h_in.T @ pre).ravel(), pre.sum(0)])
            if name != "candidate":
                grad_h += pre @ u.T
                grad_x += pre @ w.T
        return grad_x, grad_h, np.concatenate([grads[name] for name in GATES])

    def run(self, theta: Tensor, xs: Tensor, h0: Tensor) -> tuple[Tensor, list[GruCache]]:
        """Consume xs (T, n, input_dim) in order.

        Returns:
            Tuple of (hidden states (T, n, hidden) after each step, per-step caches)
        """
        if xs.ndim != 3 or xs.shape[2] != self.input_dim:
            raise DimensionError("GruCell.run", f"(T, n, {self.input_dim})", xs.shape)
        h = h0
        states, caches = [], []
        for x in xs:
            h, cache = self.step(theta, x, h)
            states.append(h)
            caches.append(cache)
        return np.stack(states), caches

    def run_backward(
        self, theta: Tensor, caches: list[GruCache], grad_states: Tensor
    ) -> tuple[Tensor, Tensor, Tensor]:
        """Backpropagation through time for cotangents on every hidden state.

        Returns:
            Tuple of (grad xs (T, n, input_dim), grad h0, grad theta)
        """
        grad_theta = np.zeros(self.param_count)
        grad_xs = np.zeros((len(caches), *caches[0].x.shape))
        carry = np.zeros_like(grad_states[0])
        for k in range(len(caches) - 1, -1, -1):
            grad_x, carry, step_theta = self.step_backward(
                theta, caches[k], carry + grad_states[k]
            )
            grad_xs[k] = grad_x
            grad_theta += step_theta
        return grad_xs, carry, grad_theta
