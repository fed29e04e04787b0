"""Synthetic spiral trajectories and irregular subsampling."""

import logging
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from odegrad.core.exceptions import ArgumentError, DimensionError
from odegrad.core.io import write_csv
from odegrad.core.rng import RngState, gaussian_sample
from odegrad.core.tensor import Tensor

logger = logging.getLogger(__name__)

# Constants
SPIRAL_START_RADIUS = 0.3
SPIRAL_GROWTH = 0.3
SPIRAL_TURNS = 2.0
CENTRE_JITTER = 0.1
DEFAULT_NOISE_STD = 0.1
DEFAULT_DURATION = 10.0

COUNTER_CLOCKWISE = 0
CLOCKWISE = 1


@dataclass(frozen=True)
class SpiralDataset:
    """Spirals observed on a shared ascending time grid.

    observations and truth have shape (n_traj, n_time, 2); labels hold CLOCKWISE or
    COUNTER_CLOCKWISE per trajectory.
    """

    times: Tensor
    observations: Tensor
    truth: Tensor
    labels: Tensor
    noise_std: float

    @property
    def n_traj(self) -> int:
        return self.observations.shape[0]

    @property
    def n_time(self) -> int:
        return len(self.times)

    def window(self, start: int, stop: int) -> "SpiralDataset":
        """Restrict every trajectory to grid indices [start, stop)."""
        return replace(
            self,
            times=self.times[start:stop],
            observations=self.observations[:, start:stop],
            truth=self.truth[:, start:stop],
        )

    def select(self, indices: Tensor) -> "SpiralDataset":
        return replace(
            self,
            observations=self.observations[indices],
            truth=self.truth[indices],
            labels=self.labels[indices],
        )

    def as_irregular(self) -> "IrregularDataset":
        idx = np.tile(np.arange(self.n_time), (self.n_traj, 1))
        return IrregularDataset(
            np.tile(self.times, (self.n_traj, 1)), self.observations.copy(), idx
        )


@dataclass(frozen=True)
class IrregularDataset:
    """Per-trajectory observation times (n, k) and values (n, k, obs_dim).

    indices records where each observation sits on the source grid.
    """

    times: Tensor
    observations: Tensor
    indices: Tensor

    def __post_init__(self) -> None:
        if self.times.ndim != 2 or self.observations.shape[:2] != self.times.shape:
            raise DimensionError("IrregularDataset", self.times.shape, self.observations.shape[:2])

    @property
    def n_traj(self) -> int:
        return self.times.shape[0]

    @property
    def n_obs(self) -> int:
        return self.times.shape[1]

    def batch(self, rows: Tensor) -> "IrregularDataset":
        return IrregularDataset(self.times[rows], self.observations[rows], self.indices[rows])


def spiral_curve(
    times: Tensor, phase: float, centre: Tensor, clockwise: bool, duration: float
) -> Tensor:
    """Noise-free Archimedean spiral r = a + b s sampled at times, shape (len(times), 2)."""
    s = SPIRAL_TURNS * 2.0 * np.pi * (times - times[0]) / duration
    radius = SPIRAL_START_RADIUS + SPIRAL_GROWTH * s
    angle = phase + (-s if clockwise else s)
    return centre + radius[:, None] * np.column_stack([np.cos(angle), np.sin(angle)])


def generate_spirals(
    rng: RngState,
    n_traj: int,
    n_time: int,
    noise_std: float = DEFAULT_NOISE_STD,
    duration: float = DEFAULT_DURATION,
) -> SpiralDataset:
    """Half clockwise and half counter-clockwise spirals with Gaussian observation noise.

    Raises:
        ArgumentError: If n_traj is odd or not positive
    """
    if n_traj < 2 or n_traj % 2:
        raise ArgumentError(f"generate_spirals: n_traj must be positive and even, got {n_traj}")
    if n_time < 1:
        raise ArgumentError(f"generate_spirals: n_time must be >= 1, got {n_time}")
    times = np.linspace(0.0, duration, n_time)
    labels = np.array([COUNTER_CLOCKWISE, CLOCKWISE] * (n_traj // 2))
    labels = labels[rng.choice(n_traj, n_traj)]
    phases = rng.uniform(0.0, 2.0 * np.pi, n_traj)
    centres = gaussian_sample(rng, (n_traj, 2), std=CENTRE_JITTER)
    truth = np.stack(
        [
            spiral_curve(times, phases[j], centres[j], labels[j] == CLOCKWISE, duration)
            for j in range(n_traj)
        ]
    )
    observations = truth + gaussian_sample(rng, truth.shape, std=noise_std)
    logger.verbose(f"Generated {n_traj} spirals x {n_time} points (noise {noise_std})")
    return SpiralDataset(times, observations, truth, labels, noise_std)


def subsample(dataset: SpiralDataset, rng: RngState, k: int) -> IrregularDataset:
    """k sorted grid points per trajectory, drawn without replacement independently.

    Raises:
        ArgumentError: If k is not in [1, n_time]
    """
    if not 1 <= k <= dataset.n_time:
        raise ArgumentError(f"subsample: k must be in [1, {dataset.n_time}], got {k}")
    indices = np.stack([np.sort(rng.choice(dataset.n_time, k)) for _ in range(dataset.n_traj)])
    rows = np.arange(dataset.n_traj)[:, None]
    return IrregularDataset(dataset.times[indices], dataset.observations[rows, indices], indices)


def write_spirals_csv(dataset: SpiralDataset, directory: Path) -> list[Path]:
    """One CSV per trajectory with columns t,x0,x1,label."""
    paths = []
    for j in range(dataset.n_traj):
        rows = [
            (t, x[0], x[1], int(dataset.labels[j]))
            for t, x in zip(dataset.times, dataset.observations[j])
        ]
        path = Path(directory) / f"spiral_{j:04d}.csv"
        paths.append(write_csv(path, ("t", "x0", "x1", "label"), rows))
    return paths
