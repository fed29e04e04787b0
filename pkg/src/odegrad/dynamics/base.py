"""Parameterized vector fields f(z, t, theta) with exact reverse-mode products."""

from abc import ABC, abstractmethod
from dataclasses import dataclass, replace
from typing import ClassVar

import numpy as np

from odegrad.core.exceptions import ArgumentError, DimensionError
from odegrad.core.tensor import Tensor, as_tensor, check_finite


@dataclass(frozen=True)
class VjpResult:
    """Vector-Jacobian products a^T df/dz, a^T df/dtheta and a^T df/dt.

    For batched states vjp_z is per sample while vjp_theta and vjp_t are summed over the batch.
    """

    vjp_z: Tensor
    vjp_theta: Tensor
    vjp_t: float


def as_batch(z: Tensor, dim: int, operation: str) -> tuple[Tensor, bool]:
    """View a state z[D] or a batch z[n, D] as a 2-D batch.

    Returns:
        Tuple of (batch of shape (n, D), whether the input was a single state)
    """
    z = as_tensor(z)
    if z.ndim == 1:
        z = z[None, :]
        single = True
    elif z.ndim == 2:
        single = False
    else:
        raise DimensionError(operation, f"(D,) or (n, D) with D={dim}", z.shape)
    if z.shape[1] != dim:
        raise DimensionError(operation, f"state dimension {dim}", z.shape[1])
    return z, single


@dataclass(frozen=True, eq=False)
class DynamicsFunc(ABC):
    """Immutable vector field with a flat parameter vector.

    Subclasses implement the batched primitives ``_eval`` and ``_vjp``; the public
    methods validate shapes, accept single states or batches and check finiteness.
    """

    tag: ClassVar[str]

    dim: int
    theta: Tensor

    def __post_init__(self) -> None:
        theta = np.array(self.theta, dtype=np.float64).ravel()
        if theta.shape != (self.param_count,):
            raise DimensionError(f"{self.tag} parameters", (self.param_count,), theta.shape)
        theta.flags.writeable = False
        object.__setattr__(self, "theta", theta)

    @property
    @abstractmethod
    def param_count(self) -> int:
        """Number of entries theta must have."""

    @property
    def time_dependent(self) -> bool:
        return False

    @abstractmethod
    def _eval(self, z: Tensor, t: float) -> Tensor:
        """dz/dt for a batch z of shape (n, D)."""

    @abstractmethod
    def _vjp(self, z: Tensor, t: float, a: Tensor) -> VjpResult:
        """Reverse-mode products for a batch z and cotangent a, both (n, D)."""

    def with_theta(self, theta: Tensor) -> "DynamicsFunc":
        """Copy of this vector field with new parameters."""
        return replace(self, theta=theta)

    def eval(self, z: Tensor, t: float) -> Tensor:
        """Evaluate dz/dt at (z, t); output has the shape of z."""
        batch, single = as_batch(z, self.dim, f"{self.tag}.eval")
        out = check_finite(self._eval(batch, float(t)), f"{self.tag}.eval")
        return out[0] if single else out

    def __call__(self, z: Tensor, t: float) -> Tensor:
        return self.eval(z, t)

    def vjp(self, z: Tensor, t: float, a: Tensor) -> VjpResult:
        """Exact products a^T df/dz, a^T df/dtheta, a^T df/dt."""
        batch, single = as_batch(z, self.dim, f"{self.tag}.vjp")
        a = as_tensor(a)
        if a.shape != np.shape(z):
            raise DimensionError(f"{self.tag}.vjp cotangent", np.shape(z), a.shape)
        result = self._vjp(batch, float(t), a.reshape(batch.shape))
        vjp_z = check_finite(result.vjp_z, f"{self.tag}.vjp")
        return VjpResult(vjp_z[0] if single else vjp_z, result.vjp_theta, float(result.vjp_t))

    def basis_trace(self, z: Tensor, t: float) -> Tensor | float:
        """tr(df/dz) assembled from D basis-vector VJPs."""
        batch, single = as_batch(z, self.dim, f"{self.tag}.jacobian_trace")
        trace = np.zeros(batch.shape[0])
        for i in range(self.dim):
            e = np.zeros_like(batch)
            e[:, i] = 1.0
            trace += self._vjp(batch, float(t), e).vjp_z[:, i]
        return float(trace[0]) if single else trace

    def _trace(self, z: Tensor, t: float) -> Tensor:
        """Per-sample trace for a batch; closed forms override this."""
        return np.asarray(self.basis_trace(z, t))

    def jacobian_trace(self, z: Tensor, t: float) -> Tensor | float:
        """Exact tr(df/dz); a scalar for a single state, shape (n,) for a batch."""
        batch, single = as_batch(z, self.dim, f"{self.tag}.jacobian_trace")
        trace = check_finite(np.asarray(self._trace(batch, float(t))), f"{self.tag}.trace")
        return float(trace[0]) if single else trace

    def _trace_vjp(self, z: Tensor, t: float, g: Tensor) -> VjpResult:
        raise ArgumentError(
            f"{self.tag} dynamics have no closed-form trace gradient; "
            "use linear, planar, gated_planar_sum or hamiltonian_split for flow training"
        )

    def trace_vjp(self, z: Tensor, t: float, g: Tensor | float) -> VjpResult:
        """Products of per-sample weights g with the gradients of tr(df/dz).

        Returns d(sum_k g_k tr_k)/dz per sample, and summed d/dtheta and d/dt.
        """
        batch, single = as_batch(z, self.dim, f"{self.tag}.trace_vjp")
        g = np.broadcast_to(np.asarray(g, dtype=np.float64), (batch.shape[0],))
        result = self._trace_vjp(batch, float(t), g)
        return VjpResult(
            result.vjp_z[0] if single else result.vjp_z, result.vjp_theta, float(result.vjp_t)
        )
