"""Central finite-difference oracles for dynamics functions."""

from collections.abc import Callable, Sequence

import numpy as np

from odegrad.core.exceptions import ArgumentError
from odegrad.core.tensor import Tensor, as_tensor
from odegrad.dynamics.base import DynamicsFunc, VjpResult

DEFAULT_FD_EPS = 1e-5


def central_difference(
    fn: Callable[[Tensor], float],
    x: Tensor,
    eps: float = DEFAULT_FD_EPS,
    indices: Sequence[int] | None = None,
) -> Tensor:
    """Gradient of a scalar function by central differences.

    Args:
        fn: Scalar function of an array
        x: Point of evaluation (any shape)
        eps: Perturbation size
        indices: Flat indices to differentiate (all when None); others are left at 0

    Returns:
        Array shaped like x
    """
    if eps <= 0:
        raise ArgumentError(f"finite-difference eps must be > 0, got {eps}")
    x = as_tensor(x)
    flat = x.ravel().copy()
    grad = np.zeros_like(flat)
    for i in range(flat.size) if indices is None else indices:
        saved = flat[i]
        flat[i] = saved + eps
        up = fn(flat.reshape(x.shape))
        flat[i] = saved - eps
        down = fn(flat.reshape(x.shape))
        flat[i] = saved
        grad[i] = (up - down) / (2.0 * eps)
    return grad.reshape(x.shape)


def fd_jacobian(f: DynamicsFunc, z: Tensor, t: float, eps: float = DEFAULT_FD_EPS) -> Tensor:
    """Central-difference Jacobian of f at a single state; column i is d f / d z_i."""
    if eps <= 0:
        raise ArgumentError(f"finite-difference eps must be > 0, got {eps}")
    z = as_tensor(z)
    jac = np.zeros((f.dim, f.dim))
    for i in range(f.dim):
        step = np.zeros(f.dim)
        step[i] = eps
        jac[:, i] = (f.eval(z + step, t) - f.eval(z - step, t)) / (2.0 * eps)
    return jac


def fd_vjp(
    f: DynamicsFunc, z: Tensor, t: float, a: Tensor, eps: float = DEFAULT_FD_EPS
) -> VjpResult:
    """Finite-difference estimate of every component ``DynamicsFunc.vjp`` returns."""
    a = as_tensor(a)
    vjp_z = central_difference(lambda zz: float(np.sum(a * f.eval(zz, t))), z, eps)
    vjp_theta = central_difference(
        lambda th: float(np.sum(a * f.with_theta(th).eval(z, t))), f.theta, eps
    )
    vjp_t = central_difference(lambda tt: float(np.sum(a * f.eval(z, float(tt[0])))), [t], eps)
    return VjpResult(vjp_z, vjp_theta, float(vjp_t[0]))
