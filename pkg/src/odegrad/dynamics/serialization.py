"""Flat little-endian binary format for dynamics functions and extra parameter blocks.

Layout::

    b"ODEG"
    int32 tag, int32 flags, int32 activation, int32 n_dims, int32 dims[n_dims], int32 n_params
    float64 theta[n_params]
    repeated: int32 block_length, float64 block[block_length]
"""

import numpy as np

from odegrad.core.exceptions import ArgumentError, DimensionError
from odegrad.core.tensor import Tensor
from odegrad.dynamics.architectures import (
    GatedPlanarDynamics,
    HamiltonianSplitDynamics,
    LinearDynamics,
    MlpDynamics,
    PlanarDynamics,
)
from odegrad.dynamics.base import DynamicsFunc

MAGIC = b"ODEG"
TAG_CODES = {"linear": 0, "mlp": 1, "planar": 2, "gated_planar_sum": 3, "hamiltonian_split": 4}
ACTIVATION_CODES = {"tanh": 0, "relu": 1, "sigmoid": 2, "softplus": 3, "identity": 4}
INT = np.dtype("<i4")
FLOAT = np.dtype("<f8")
MIN_DIMS = {"linear": 1, "mlp": 1, "planar": 1, "gated_planar_sum": 2, "hamiltonian_split": 2}


def _header(f: DynamicsFunc) -> tuple[int, str, list[int]]:
    """Return (flags, activation, dims) for an architecture."""
    match f:
        case MlpDynamics():
            return int(f.with_time), f.activation, [f.dim, *f.hidden]
        case PlanarDynamics():
            return 0, f.activation, [f.dim]
        case GatedPlanarDynamics():
            return 1, f.activation, [f.dim, f.units]
        case HamiltonianSplitDynamics():
            return 0, "tanh", [f.dim, f.hidden]
        case LinearDynamics():
            return 0, "identity", [f.dim]
    raise ArgumentError(f"Cannot serialize dynamics of type {type(f).__name__}")


def encode_dynamics(f: DynamicsFunc, blocks: list[Tensor] | None = None) -> bytes:
    """Serialize architecture, parameters and optional trailing blocks."""
    flags, activation, dims = _header(f)
    header = [TAG_CODES[f.tag], flags, ACTIVATION_CODES[activation], len(dims), *dims, f.theta.size]
    parts = [MAGIC, np.asarray(header, dtype=INT).tobytes(), f.theta.astype(FLOAT).tobytes()]
    for block in blocks or []:
        flat = np.asarray(block, dtype=FLOAT).ravel()
        parts.append(np.asarray([flat.size], dtype=INT).tobytes())
        parts.append(flat.tobytes())
    return b"".join(parts)


def _read_ints(buf: bytes, offset: int, count: int) -> tuple[list[int], int]:
    values = np.frombuffer(buf, dtype=INT, count=count, offset=offset)
    return [int(v) for v in values], offset + count * INT.itemsize


def _read_floats(buf: bytes, offset: int, count: int) -> tuple[Tensor, int]:
    values = np.frombuffer(buf, dtype=FLOAT, count=count, offset=offset).astype(np.float64)
    return values, offset + count * FLOAT.itemsize


def decode_dynamics(buf: bytes) -> tuple[DynamicsFunc, list[Tensor]]:
    """Inverse of ``encode_dynamics``.

    Returns:
        Tuple of (dynamics function, trailing parameter blocks)

    Raises:
        ArgumentError: If the buffer is not a valid checkpoint
    """
    if buf[:4] != MAGIC:
        raise ArgumentError("Not an odegrad checkpoint (bad magic)")
    try:
        (tag_code, flags, act_code, n_dims), offset = _read_ints(buf, 4, 4)
        if n_dims < 0:
            raise ValueError(f"negative dimension count {n_dims}")
        dims, offset = _read_ints(buf, offset, n_dims)
        (n_params,), offset = _read_ints(buf, offset, 1)
        if n_params < 0:
            raise ValueError(f"negative parameter count {n_params}")
        theta, offset = _read_floats(buf, offset, n_params)
        blocks = []
        while offset < len(buf):
            (length,), offset = _read_ints(buf, offset, 1)
            if length < 0:
                raise ValueError(f"negative block length {length}")
            block, offset = _read_floats(buf, offset, length)
            blocks.append(block)
    except ValueError as e:
        raise ArgumentError(f"Malformed checkpoint: {e}") from e

    tags = {v: k for k, v in TAG_CODES.items()}
    activations = {v: k for k, v in ACTIVATION_CODES.items()}
    if tag_code not in tags:
        raise ArgumentError(f"Unknown dynamics tag code {tag_code}")
    if act_code not in activations:
        raise ArgumentError(f"Unknown activation code {act_code}")
    tag, activation = tags[tag_code], activations[act_code]
    if n_dims < MIN_DIMS[tag]:
        raise ArgumentError(f"{tag} checkpoint needs {MIN_DIMS[tag]} dims, got {n_dims}")
    try:
        f = _build(tag, flags, activation, dims, theta)
    except DimensionError as e:
        raise ArgumentError(f"{n_params} parameters do not fit the {tag} header: {e}") from e
    return f, blocks


def _build(tag: str, flags: int, activation: str, dims: list[int], theta: Tensor) -> DynamicsFunc:
    match tag:
        case "linear":
            return LinearDynamics(dims[0], theta)
        case "mlp":
            return MlpDynamics(
                dims[0], theta, hidden=tuple(dims[1:]), activation=activation, with_time=bool(flags)
            )
        case "planar":
            return PlanarDynamics(dims[0], theta, activation=activation)
        case "gated_planar_sum":
            return GatedPlanarDynamics(dims[0], theta, units=dims[1], activation=activation)
        case "hamiltonian_split":
            return HamiltonianSplitDynamics(dims[0], theta, hidden=dims[1])
    raise ArgumentError(f"Unknown dynamics tag {tag}")
