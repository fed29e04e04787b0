"""Differentiable ODE solvers, adjoint gradients, continuous normalizing flows and latent ODEs."""

__version__ = "0.1.0"
