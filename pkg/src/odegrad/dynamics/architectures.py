"""Dynamics architectures: linear, MLP, planar, gated planar sum and Hamiltonian split."""

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from odegrad.core.exceptions import ArgumentError, DimensionError
from odegrad.core.rng import RngState
from odegrad.core.tensor import Tensor, as_tensor
from odegrad.dynamics.base import DynamicsFunc, VjpResult
from odegrad.dynamics.layers import Activation, Mlp, get_activation


@dataclass(frozen=True, eq=False)
class LinearDynamics(DynamicsFunc):
    """f(z) = A z with theta = A flattened row-major."""

    tag = "linear"

    @property
    def param_count(self) -> int:
        return self.dim * self.dim

    @property
    def matrix(self) -> Tensor:
        return self.theta.reshape(self.dim, self.dim)

    def _eval(self, z: Tensor, t: float) -> Tensor:
        return z @ self.matrix.T

    def _vjp(self, z: Tensor, t: float, a: Tensor) -> VjpResult:
        # d(a^T A z)/dA_ij = a_i z_j
        return VjpResult(a @ self.matrix, (a.T @ z).ravel(), 0.0)

    def _trace(self, z: Tensor, t: float) -> Tensor:
        return np.full(z.shape[0], np.trace(self.matrix))

    def _trace_vjp(self, z: Tensor, t: float, g: Tensor) -> VjpResult:
        return VjpResult(np.zeros_like(z), (g.sum() * np.eye(self.dim)).ravel(), 0.0)


@dataclass(frozen=True, eq=False)
class MlpDynamics(DynamicsFunc):
    """Fully connected network; with time dependence t is appended to the input."""

    tag = "mlp"

    hidden: tuple[int, ...] = (20,)
    activation: Activation = "tanh"
    with_time: bool = True

    @property
    def net(self) -> Mlp:
        return Mlp((self.dim + int(self.with_time), *self.hidden, self.dim), self.activation)

    @property
    def param_count(self) -> int:
        return self.net.param_count

    @property
    def time_dependent(self) -> bool:
        return self.with_time

    def _inputs(self, z: Tensor, t: float) -> Tensor:
        if not self.with_time:
            return z
        return np.hstack([z, np.full((z.shape[0], 1), t)])

    def _eval(self, z: Tensor, t: float) -> Tensor:
        return self.net(self.theta, self._inputs(z, t))

    def _vjp(self, z: Tensor, t: float, a: Tensor) -> VjpResult:
        net = self.net
        _, cache = net.forward(self.theta, self._inputs(z, t))
        grad_in, grad_theta = net.backward(self.theta, cache, a)
        vjp_t = float(grad_in[:, self.dim].sum()) if self.with_time else 0.0
        return VjpResult(grad_in[:, : self.dim], grad_theta, vjp_t)


@dataclass(frozen=True, eq=False)
class PlanarDynamics(DynamicsFunc):
    """Single planar unit f(z) = u h(w^T z + b); theta = [u, w, b]."""

    tag = "planar"

    activation: Activation = "tanh"

    @property
    def param_count(self) -> int:
        return 2 * self.dim + 1

    def unpack(self) -> tuple[Tensor, Tensor, float]:
        d = self.dim
        return self.theta[:d], self.theta[d : 2 * d], float(self.theta[2 * d])

    def _eval(self, z: Tensor, t: float) -> Tensor:
        u, w, b = self.unpack()
        return get_activation(self.activation).fn(z @ w + b)[:, None] * u

    def _vjp(self, z: Tensor, t: float, a: Tensor) -> VjpResult:
        u, w, b = self.unpack()
        act = get_activation(self.activation)
        s = z @ w + b
        h = act.fn(s)
        coeff = act.d1(s, h) * (a @ u)
        grad_theta = np.concatenate([h @ a, coeff @ z, [coeff.sum()]])
        return VjpResult(coeff[:, None] * w, grad_theta, 0.0)

    def _trace(self, z: Tensor, t: float) -> Tensor:
        # tr(u h'(s) w^T) = h'(s) u.w
        u, w, b = self.unpack()
        act = get_activation(self.activation)
        s = z @ w + b
        return act.d1(s, act.fn(s)) * (u @ w)

    def _trace_vjp(self, z: Tensor, t: float, g: Tensor) -> VjpResult:
        u, w, b = self.unpack()
        act = get_activation(self.activation)
        s = z @ w + b
        h = act.fn(s)
        d1 = g * act.d1(s, h)
        d2 = g * act.d2(s, h) * (u @ w)
        grad_theta = np.concatenate([d1.sum() * w, d1.sum() * u + d2 @ z, [d2.sum()]])
        return VjpResult(d2[:, None] * w, grad_theta, 0.0)


@dataclass(frozen=True, eq=False)
class GatedPlanarDynamics(DynamicsFunc):
    """Sum of M planar units, each gated in time.

    f(z, t) = sum_n sigma_n(t) u_n h(w_n^T z + b_n) with sigma_n(t) = sigmoid(alpha_n t + beta_n).
    theta = [U (M x D), W (M x D), b (M), alpha (M), beta (M)].
    """

    tag = "gated_planar_sum"

    units: int = 1
    activation: Activation = "tanh"

    @property
    def param_count(self) -> int:
        return 2 * self.units * self.dim + 3 * self.units

    @property
    def time_dependent(self) -> bool:
        return True

    def unpack(self) -> tuple[Tensor, Tensor, Tensor, Tensor, Tensor]:
        m, d = self.units, self.dim
        theta = self.theta
        u = theta[: m * d].reshape(m, d)
        w = theta[m * d : 2 * m * d].reshape(m, d)
        rest = theta[2 * m * d :]
        return u, w, rest[:m], rest[m : 2 * m], rest[2 * m :]

    def gates(self, t: float) -> Tensor:
        _, _, _, alpha, beta = self.unpack()
        return expit(alpha * t + beta)

    def unit_evals(self, z: Tensor, t: float) -> Tensor:
        """Gated per-unit contributions, shape (n, M, D)."""
        u, w, b, _, _ = self.unpack()
        h = get_activation(self.activation).fn(z @ w.T + b)
        return (h * self.gates(t))[:, :, None] * u[None, :, :]

    def unit_traces(self, z: Tensor, t: float) -> Tensor:
        """Closed-form per-unit traces sigma_n h'(s_n) u_n.w_n, shape (n, M)."""
        u, w, b, _, _ = self.unpack()
        act = get_activation(self.activation)
        s = z @ w.T + b
        return act.d1(s, act.fn(s)) * self.gates(t) * np.sum(u * w, axis=1)

    def _eval(self, z: Tensor, t: float) -> Tensor:
        u, w, b, _, _ = self.unpack()
        h = get_activation(self.activation).fn(z @ w.T + b)
        return (h * self.gates(t)) @ u

    def _gate_grads(self, t: float, grad_gate: Tensor) -> tuple[Tensor, Tensor, float]:
        _, _, _, alpha, _ = self.unpack()
        sigma = self.gates(t)
        dpre = grad_gate * sigma * (1.0 - sigma)
        return dpre * t, dpre, float(dpre @ alpha)

    def _vjp(self, z: Tensor, t: float, a: Tensor) -> VjpResult:
        u, w, b, _, _ = self.unpack()
        act = get_activation(self.activation)
        s = z @ w.T + b
        h = act.fn(s)
        sigma = self.gates(t)
        au = a @ u.T
        coeff = sigma * au * act.d1(s, h)
        d_alpha, d_beta, d_t = self._gate_grads(t, np.sum(h * au, axis=0))
        grad_theta = np.concatenate(
            [
                ((h * sigma).T @ a).ravel(),
                (coeff.T @ z).ravel(),
                coeff.sum(axis=0),
                d_alpha,
                d_beta,
            ]
        )
        return VjpResult(coeff @ w, grad_theta, d_t)

    def _trace(self, z: Tensor, t: float) -> Tensor:
        return self.unit_traces(z, t).sum(axis=1)

    def _trace_vjp(self, z: Tensor, t: float, g: Tensor) -> VjpResult:
        u, w, b, _, _ = self.unpack()
        act = get_activation(self.activation)
        s = z @ w.T + b
        h = act.fn(s)
        sigma = self.gates(t)
        uw = np.sum(u * w, axis=1)
        gd1 = g[:, None] * act.d1(s, h)
        second = g[:, None] * act.d2(s, h) * sigma * uw
        c = sigma * gd1.sum(axis=0)
        d_alpha, d_beta, d_t = self._gate_grads(t, (gd1 * uw).sum(axis=0))
        grad_theta = np.concatenate(
            [
                (c[:, None] * w).ravel(),
                (c[:, None] * u + second.T @ z).ravel(),
                second.sum(axis=0),
                d_alpha,
                d_beta,
            ]
        )
        return VjpResult(second @ w, grad_theta, d_t)


@dataclass(frozen=True, eq=False)
class HamiltonianSplitDynamics(DynamicsFunc):
    """Two-partition flow dq/dt = F(p), dp/dt = G(q); zero Jacobian diagonal.

    theta = [theta_F, theta_G] for two one-hidden-layer networks of width ``hidden``.
    """

    tag = "hamiltonian_split"

    hidden: int = 16

    def __post_init__(self) -> None:
        if self.dim % 2:
            raise DimensionError("hamiltonian_split", "even state dimension", self.dim)
        super().__post_init__()

    @property
    def half_net(self) -> Mlp:
        half = self.dim // 2
        return Mlp((half, self.hidden, half))

    @property
    def param_count(self) -> int:
        return 2 * self.half_net.param_count

    def _split(self) -> tuple[Tensor, Tensor]:
        n = self.half_net.param_count
        return self.theta[:n], self.theta[n:]

    def _eval(self, z: Tensor, t: float) -> Tensor:
        half = self.dim // 2
        net = self.half_net
        theta_f, theta_g = self._split()
        return np.hstack([net(theta_f, z[:, half:]), net(theta_g, z[:, :half])])

    def _vjp(self, z: Tensor, t: float, a: Tensor) -> VjpResult:
        half = self.dim // 2
        net = self.half_net
        theta_f, theta_g = self._split()
        _, cache_f = net.forward(theta_f, z[:, half:])
        _, cache_g = net.forward(theta_g, z[:, :half])
        grad_p, grad_f = net.backward(theta_f, cache_f, a[:, :half])
        grad_q, grad_g = net.backward(theta_g, cache_g, a[:, half:])
        return VjpResult(np.hstack([grad_q, grad_p]), np.concatenate([grad_f, grad_g]), 0.0)

    def _trace(self, z: Tensor, t: float) -> Tensor:
        return np.zeros(z.shape[0])

    def _trace_vjp(self, z: Tensor, t: float, g: Tensor) -> VjpResult:
        return VjpResult(np.zeros_like(z), np.zeros(self.param_count), 0.0)


def build_linear(matrix: Tensor) -> LinearDynamics:
    matrix = as_tensor(matrix)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise DimensionError("build_linear", "square matrix", matrix.shape)
    return LinearDynamics(matrix.shape[0], matrix.ravel())


def build_mlp_dynamics(
    input_dim: int,
    hidden_dims: list[int] | tuple[int, ...],
    rng: RngState | None,
    time_dependent: bool = True,
    activation: Activation = "tanh",
    zero: bool = False,
) -> MlpDynamics:
    """MLP vector field with uniform(+-1/sqrt(fan_in)) initialization.

    With zero=True (test mode) all parameters are zero.
    """
    hidden = tuple(int(h) for h in hidden_dims)
    net = Mlp((input_dim + int(time_dependent), *hidden, input_dim), activation)
    return MlpDynamics(
        input_dim,
        net.init_theta(rng, zero=zero),
        hidden=hidden,
        activation=activation,
        with_time=time_dependent,
    )


def build_planar(dim: int, rng: RngState, activation: Activation = "tanh") -> PlanarDynamics:
    bound = 1.0 / np.sqrt(dim)
    theta = np.concatenate([rng.uniform(-bound, bound, 2 * dim), [0.0]])
    return PlanarDynamics(dim, theta, activation=activation)


def build_gated_planar(
    dim: int, units: int, rng: RngState, activation: Activation = "tanh"
) -> GatedPlanarDynamics:
    """M gated planar units; gates start near 1/2 and weights at +-1/sqrt(D)."""
    if units < 1:
        raise DimensionError("build_gated_planar", "M >= 1", units)
    bound = 1.0 / np.sqrt(dim)
    theta = np.concatenate(
        [
            rng.uniform(-bound, bound, 2 * units * dim),
            rng.uniform(-bound, bound, units),
            rng.uniform(-1.0, 1.0, units),
            np.zeros(units),
        ]
    )
    return GatedPlanarDynamics(dim, theta, units=units, activation=activation)


def build_hamiltonian(dim: int, hidden: int, rng: RngState) -> HamiltonianSplitDynamics:
    half = dim // 2
    net = Mlp((half, hidden, half))
    theta = np.concatenate([net.init_theta(rng), net.init_theta(rng)])
    return HamiltonianSplitDynamics(dim, theta, hidden=hidden)


def build_dynamics(
    name: str, dim: int, rng: RngState, hidden: int = 16, units: int = 4
) -> DynamicsFunc:
    """Randomly initialized dynamics of the named architecture.

    Raises:
        ArgumentError: If the name is unknown
    """
    match name:
        case "linear":
            return build_linear(rng.uniform(-1.0, 1.0, (dim, dim)))
        case "mlp":
            return build_mlp_dynamics(dim, [hidden], rng, time_dependent=True)
        case "planar":
            planar = build_planar(dim, rng)
            return planar.with_theta(np.concatenate([planar.theta[:-1], rng.uniform(-0.5, 0.5, 1)]))
        case "gated_planar_sum":
            return build_gated_planar(dim, units, rng)
        case "hamiltonian_split":
            return build_hamiltonian(dim, hidden, rng)
    raise ArgumentError(f"unknown dynamics architecture {name!r}")
