"""Continuous normalizing flow: log-density augmented dynamics and model container."""

from dataclasses import dataclass, replace

import numpy as np

from odegrad.core.tensor import Tensor
from odegrad.dynamics.base import DynamicsFunc, VjpResult

LOG_2PI = float(np.log(2.0 * np.pi))


def standard_normal_logpdf(z: Tensor) -> Tensor:
    """log N(z; 0, I) per row of z[n, D] (scalar for a single state)."""
    z = np.asarray(z, dtype=np.float64)
    return -0.5 * np.sum(z * z, axis=-1) - 0.5 * z.shape[-1] * LOG_2PI


def standard_normal_score(z: Tensor) -> Tensor:
    return -np.asarray(z, dtype=np.float64)


@dataclass(frozen=True)
class FlowState:
    """State z and accumulated log-density change (zero at the start of integration)."""

    z: Tensor
    delta_logp: Tensor | float

    def pack(self) -> Tensor:
        """Batch layout [z, delta_logp] of shape (n, D + 1) (or (D + 1,) for one state)."""
        delta = np.asarray(self.delta_logp, dtype=np.float64)
        return np.concatenate([self.z, delta[..., None]], axis=-1)

    @classmethod
    def unpack(cls, packed: Tensor) -> "FlowState":
        return cls(packed[..., :-1], packed[..., -1])


@dataclass(frozen=True, eq=False)
class FlowDynamics(DynamicsFunc):
    """Vector field on [z, log p]: d/dt [z, log p] = [f(z, t), -tr(df/dz)].

    Shares its parameter vector with the wrapped dynamics, so adjoint gradients of the
    flow are gradients of the wrapped dynamics' parameters.
    """

    tag = "flow"

    base: DynamicsFunc | None = None

    @classmethod
    def wrap(cls, base: DynamicsFunc) -> "FlowDynamics":
        return cls(base.dim + 1, base.theta, base=base)

    @property
    def param_count(self) -> int:
        return self.base.param_count

    @property
    def time_dependent(self) -> bool:
        return self.base.time_dependent

    def with_theta(self, theta: Tensor) -> "FlowDynamics":
        return replace(self, theta=theta, base=self.base.with_theta(theta))

    def _eval(self, state: Tensor, t: float) -> Tensor:
        z = state[:, :-1]
        return np.hstack([self.base._eval(z, t), -self.base._trace(z, t)[:, None]])

    def _vjp(self, state: Tensor, t: float, a: Tensor) -> VjpResult:
        z = state[:, :-1]
        flow = self.base._vjp(z, t, a[:, :-1])
        # a_logp * (-tr) contributes -a_logp-weighted trace gradients
        trace = self.base._trace_vjp(z, t, -a[:, -1])
        vjp_z = np.hstack([flow.vjp_z + trace.vjp_z, np.zeros((z.shape[0], 1))])
        return VjpResult(vjp_z, flow.vjp_theta + trace.vjp_theta, flow.vjp_t + trace.vjp_t)


def flow_dynamics(model: "CnfModel", s: FlowState, t: float) -> FlowState:
    """Derivative [f(z, t), -tr(df/dz)] of a flow state."""
    return FlowState(model.dynamics.eval(s.z, t), -model.dynamics.jacobian_trace(s.z, t))


@dataclass(frozen=True)
class CnfModel:
    """Dynamics integrated over [t0, t1] from a standard normal base distribution."""

    dynamics: DynamicsFunc
    t0: float = 0.0
    t1: float = 1.0

    @property
    def dim(self) -> int:
        return self.dynamics.dim

    @property
    def theta(self) -> Tensor:
        return self.dynamics.theta

    @property
    def flow(self) -> FlowDynamics:
        return FlowDynamics.wrap(self.dynamics)

    def with_theta(self, theta: Tensor) -> "CnfModel":
        return replace(self, dynamics=self.dynamics.with_theta(theta))
