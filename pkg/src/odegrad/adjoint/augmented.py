"""Augmented state [z, a, a_theta, a_t] and its reverse-time dynamics."""

from dataclasses import dataclass

import numpy as np

from odegrad.core.exceptions import DimensionError
from odegrad.core.tensor import Tensor, as_tensor
from odegrad.dynamics.base import DynamicsFunc


@dataclass(frozen=True)
class AugmentedState:
    """State z, adjoint a = dL/dz, parameter adjoint a_theta and time adjoint a_t."""

    z: Tensor
    a: Tensor
    a_theta: Tensor
    a_t: float

    def pack(self) -> Tensor:
        return np.concatenate([self.z.ravel(), self.a.ravel(), self.a_theta.ravel(), [self.a_t]])

    @classmethod
    def unpack(cls, flat: Tensor, z_shape: tuple[int, ...], n_theta: int) -> "AugmentedState":
        n_z = int(np.prod(z_shape))
        expected = 2 * n_z + n_theta + 1
        if flat.shape != (expected,):
            raise DimensionError("AugmentedState.unpack", (expected,), flat.shape)
        return cls(
            flat[:n_z].reshape(z_shape),
            flat[n_z : 2 * n_z].reshape(z_shape),
            flat[2 * n_z : 2 * n_z + n_theta],
            float(flat[-1]),
        )


def aug_dynamics(f: DynamicsFunc, s: AugmentedState, t: float) -> AugmentedState:
    """Time derivative of the augmented state: [f, -a df/dz, -a df/dtheta, -a df/dt]."""
    dz = f.eval(s.z, t)
    products = f.vjp(s.z, t, s.a)
    return AugmentedState(dz, -products.vjp_z, -products.vjp_theta, -products.vjp_t)


class AugmentedDynamics:
    """Flat vector field of the augmented system, in the form the solvers integrate."""

    def __init__(self, f: DynamicsFunc, z_shape: tuple[int, ...]) -> None:
        self.f = f
        self.z_shape = tuple(z_shape)
        self.n_theta = f.param_count

    @property
    def size(self) -> int:
        """Length of the packed state: 2 * |z| + |theta| + 1."""
        return 2 * int(np.prod(self.z_shape)) + self.n_theta + 1

    def pack(self, s: AugmentedState) -> Tensor:
        return s.pack()

    def unpack(self, flat: Tensor) -> AugmentedState:
        return AugmentedState.unpack(as_tensor(flat), self.z_shape, self.n_theta)

    def __call__(self, flat: Tensor, t: float) -> Tensor:
        return aug_dynamics(self.f, self.unpack(flat), t).pack()
