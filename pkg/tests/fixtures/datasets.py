"""Tiny datasets for fast tests."""

import numpy as np

from odegrad.cnf.datasets import Dataset2D, GaussianMixture
from odegrad.core.rng import RngState
from odegrad.latent.spirals import IrregularDataset, generate_spirals, subsample


def single_gaussian(mean: float = 0.5, std: float = 0.8) -> Dataset2D:
    """One-component 2-D target with an exact density."""
    mixture = GaussianMixture(np.array([[mean, -mean]]), np.array([std]), np.array([1.0]))
    return Dataset2D("gaussian_mixture", mixture=mixture)


def tiny_spirals(seed: int = 0, n_traj: int = 4, n_time: int = 20, k: int = 8) -> IrregularDataset:
    """A handful of irregularly subsampled spirals."""
    rng = RngState(seed)
    return subsample(generate_spirals(rng, n_traj, n_time), rng, k)
