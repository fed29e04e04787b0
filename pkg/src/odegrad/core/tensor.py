"""Dense float64 tensor helpers.

Tensors are plain ``numpy.ndarray`` objects of dtype float64 in row-major (C) order.
The helpers here add the shape and finiteness contracts the rest of the library relies on.
"""

from collections.abc import Callable
from typing import Literal

import numpy as np
from scipy.special import expit

from odegrad.core.exceptions import DimensionError, NonFiniteError, NumericDomainError

Tensor = np.ndarray

ElementwiseOp = Literal["tanh", "relu", "sigmoid", "exp", "log", "softplus"]


def as_tensor(x: object) -> Tensor:
    """Convert input to a contiguous float64 array."""
    return np.ascontiguousarray(x, dtype=np.float64)


def check_finite(x: Tensor, where: str) -> Tensor:
    """Raise NonFiniteError if any entry of x is NaN or Inf.

    Args:
        x: Array to check
        where: Name of the producing operation (used in the error message)

    Returns:
        x, unchanged
    """
    if not np.all(np.isfinite(x)):
        bad = int(np.size(x) - np.count_nonzero(np.isfinite(x)))
        raise NonFiniteError(where, f"{bad} of {np.size(x)} entries")
    return x


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product of a[m x k] and b[k x n].

    Raises:
        DimensionError: If either operand is not 2-D or inner dimensions differ
    """
    a = as_tensor(a)
    b = as_tensor(b)
    if a.ndim != 2 or b.ndim != 2:
        raise DimensionError("matmul", "two 2-D operands", f"{a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise DimensionError("matmul", f"inner dimension {a.shape[1]}", b.shape[0])
    return check_finite(a @ b, "matmul")


def _log(x: Tensor) -> Tensor:
    if np.any(x <= 0):
        raise NumericDomainError("log", "all entries must be > 0")
    return np.log(x)


_ELEMENTWISE: dict[str, Callable[[Tensor], Tensor]] = {
    "tanh": np.tanh,
    "relu": lambda x: np.maximum(x, 0.0),
    "sigmoid": expit,
    "exp": np.exp,
    "log": _log,
    "softplus": lambda x: np.logaddexp(0.0, x),
}


def elementwise(op: ElementwiseOp, x: Tensor) -> Tensor:
    """Apply a scalar function entrywise, preserving shape.

    Raises:
        NumericDomainError: For log of non-positive entries or an unknown op
        NonFiniteError: If the result overflows
    """
    try:
        fn = _ELEMENTWISE[op]
    except KeyError:
        raise NumericDomainError("elementwise", f"unknown op {op!r}") from None
    return check_finite(fn(as_tensor(x)), f"elementwise[{op}]")
