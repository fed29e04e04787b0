"""Vector fields with exact vector-Jacobian products and Jacobian traces."""

from odegrad.dynamics.architectures import (
    GatedPlanarDynamics,
    HamiltonianSplitDynamics,
    LinearDynamics,
    MlpDynamics,
    PlanarDynamics,
    build_dynamics,
    build_gated_planar,
    build_hamiltonian,
    build_linear,
    build_mlp_dynamics,
    build_planar,
)
from odegrad.dynamics.base import DynamicsFunc, VjpResult
from odegrad.dynamics.checks import central_difference, fd_jacobian, fd_vjp
from odegrad.dynamics.layers import Mlp
from odegrad.dynamics.serialization import decode_dynamics, encode_dynamics

__all__ = [
    "DynamicsFunc",
    "GatedPlanarDynamics",
    "HamiltonianSplitDynamics",
    "LinearDynamics",
    "Mlp",
    "MlpDynamics",
    "PlanarDynamics",
    "VjpResult",
    "build_dynamics",
    "build_gated_planar",
    "build_hamiltonian",
    "build_linear",
    "build_mlp_dynamics",
    "build_planar",
    "central_difference",
    "decode_dynamics",
    "encode_dynamics",
    "fd_jacobian",
    "fd_vjp",
]
