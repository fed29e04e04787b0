"""Discrete planar normalizing flow, the layered baseline for continuous flows.

Each layer maps z -> z + u' h(w^T z + b) where u' is u reparameterized so that
w^T u' >= -1 and the layer stays invertible.
"""

import logging
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import expit

from odegrad.cnf.datasets import Dataset2D
from odegrad.cnf.losses import LossResult
from odegrad.cnf.model import standard_normal_logpdf
from odegrad.core.exceptions import ArgumentError, DimensionError, TrainingDivergenceError
from odegrad.core.optim import OptimizerConfig, init_optimizer, optimizer_step
from odegrad.core.rng import RngState, gaussian_sample
from odegrad.core.tensor import Tensor, as_tensor
from odegrad.dynamics.layers import Activation, get_activation

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class _LayerCache:
    z: Tensor
    s: Tensor
    h: Tensor
    u_hat: Tensor
    det: Tensor


@dataclass(frozen=True)
class PlanarFlow:
    """K planar layers in D dimensions; theta holds [u, w, b] for every layer."""

    dim: int
    layers: int
    theta: Tensor
    activation: Activation = "tanh"

    def __post_init__(self) -> None:
        theta = np.array(self.theta, dtype=np.float64).ravel()
        if theta.shape != (self.param_count,):
            raise DimensionError("planar flow parameters", (self.param_count,), theta.shape)
        object.__setattr__(self, "theta", theta)

    @property
    def param_count(self) -> int:
        return self.layers * (2 * self.dim + 1)

    @classmethod
    def init(cls, dim: int, layers: int, rng: RngState, scale: float = 0.1) -> "PlanarFlow":
        if layers < 1:
            raise ArgumentError(f"planar flow needs at least one layer, got {layers}")
        theta = gaussian_sample(rng, layers * (2 * dim + 1), std=scale)
        return cls(dim, layers, theta)

    def with_theta(self, theta: Tensor) -> "PlanarFlow":
        return replace(self, theta=theta)

    def _layer(self, k: int) -> tuple[Tensor, Tensor, float]:
        d = self.dim
        block = self.theta[k * (2 * d + 1) : (k + 1) * (2 * d + 1)]
        return block[:d], block[d : 2 * d], float(block[2 * d])

    @staticmethod
    def _u_hat(u: Tensor, w: Tensor) -> Tensor:
        wu = u @ w
        # m(x) = -1 + softplus(x)
        m = -1.0 + np.logaddexp(0.0, wu)
        return u + (m - wu) * w / (w @ w)

    def forward(self, z0: Tensor) -> tuple[Tensor, Tensor, list[_LayerCache]]:
        """Push z0[n, D] through every layer.

        Returns:
            Tuple of (zK, summed log|det J| per sample, per-layer caches)
        """
        act = get_activation(self.activation)
        z = as_tensor(z0)
        logdet = np.zeros(z.shape[0])
        caches = []
        for k in range(self.layers):
            u, w, b = self._layer(k)
            u_hat = self._u_hat(u, w)
            s = z @ w + b
            h = act.fn(s)
            det = 1.0 + act.d1(s, h) * (w @ u_hat)
            caches.append(_LayerCache(z, s, h, u_hat, det))
            logdet += np.log(np.abs(det))
            z = z + h[:, None] * u_hat
        return z, logdet, caches

    def sample(self, rng: RngState, n: int) -> tuple[Tensor, Tensor]:
        """n samples with their exact log-densities."""
        z0 = gaussian_sample(rng, (n, self.dim))
        z, logdet, _ = self.forward(z0)
        return z, standard_normal_logpdf(z0) - logdet

    def backward(
        self, caches: list[_LayerCache], grad_z: Tensor, grad_logdet: Tensor
    ) -> Tensor:
        """Parameter gradient of sum(grad_z * zK) + sum(grad_logdet * logdet)."""
        act = get_activation(self.activation)
        grad = np.zeros(self.param_count)
        gz = as_tensor(grad_z).copy()
        d = self.dim
        for k in range(self.layers - 1, -1, -1):
            c = caches[k]
            u, w, b = self._layer(k)
            d1 = act.d1(c.s, c.h)
            d2 = act.d2(c.s, c.h)
            wu_hat = w @ c.u_hat

            g_u_hat = c.h @ gz
            g_h = gz @ c.u_hat
            g_det = grad_logdet / c.det
            g_d1 = g_det * wu_hat
            g_wu_hat = float(g_det @ d1)
            g_w = g_wu_hat * c.u_hat
            g_u_hat = g_u_hat + g_wu_hat * w
            g_s = g_h * d1 + g_d1 * d2
            g_w = g_w + g_s @ c.z
            g_b = g_s.sum()
            gz = gz + g_s[:, None] * w

            # Through the reparameterization u_hat = u + (m(wu) - wu) w / |w|^2
            wu = u @ w
            ww = w @ w
            coef = -1.0 + np.logaddexp(0.0, wu) - wu
            g_wu = (expit(wu) - 1.0) * float(g_u_hat @ w) / ww
            v = coef * g_u_hat
            g_u = g_u_hat + g_wu * w
            g_w = g_w + g_wu * u + v / ww - 2.0 * (v @ w) * w / ww**2

            start = k * (2 * d + 1)
            grad[start : start + d] = g_u
            grad[start + d : start + 2 * d] = g_w
            grad[start + 2 * d] = g_b
        return grad


def planar_kl_loss_and_grad(flow: PlanarFlow, target: Dataset2D, z0: Tensor) -> LossResult:
    """mean(log q(zK) - log p(zK)) for fixed base samples z0 and its exact gradient."""
    n = z0.shape[0]
    z, logdet, caches = flow.forward(z0)
    value = float(np.mean(standard_normal_logpdf(z0) - logdet - target.log_prob(z)))
    grad = flow.backward(caches, -target.score(z) / n, np.full(n, -1.0 / n))
    return LossResult(value, grad, 0, 0)


def train_planar_nf(
    flow: PlanarFlow,
    target: Dataset2D,
    iters: int,
    rng: RngState,
    batch_size: int = 100,
    optimizer: OptimizerConfig | None = None,
) -> tuple[PlanarFlow, list[float]]:
    """Fit the flow to a target density by reparameterized KL minimization.

    Returns:
        Tuple of (trained flow, loss per iteration)
    """
    optimizer = optimizer or OptimizerConfig(name="rmsprop")
    state = init_optimizer(optimizer, flow.theta)
    losses = []
    for it in range(iters):
        result = planar_kl_loss_and_grad(flow, target, gaussian_sample(rng, (batch_size, flow.dim)))
        if not np.isfinite(result.value):
            raise TrainingDivergenceError(it, result.value)
        state, theta = optimizer_step(state, flow.theta, result.grad)
        flow = flow.with_theta(theta)
        losses.append(result.value)
        logger.verbose(f"planar nf iter {it}: loss={result.value:.6f}")
    return flow, losses
