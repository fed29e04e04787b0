"""Adjoint sensitivities and the direct-backpropagation baseline."""

from odegrad.adjoint.augmented import AugmentedDynamics, AugmentedState, aug_dynamics
from odegrad.adjoint.direct import Rk4Tape, direct_backprop_rk4, rk4_backward, rk4_forward
from odegrad.adjoint.gradients import GradientBundle, backward_gradients, backward_gradients_multi
from odegrad.adjoint.nfe import NfeReport, nfe_report

__all__ = [
    "AugmentedDynamics",
    "AugmentedState",
    "GradientBundle",
    "NfeReport",
    "Rk4Tape",
    "aug_dynamics",
    "backward_gradients",
    "backward_gradients_multi",
    "direct_backprop_rk4",
    "nfe_report",
    "rk4_backward",
    "rk4_forward",
]
