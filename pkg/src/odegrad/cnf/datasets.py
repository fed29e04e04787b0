"""Two-dimensional toy datasets and Gaussian-mixture targets with exact densities."""

from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.special import logsumexp, softmax

from odegrad.core.exceptions import ArgumentError, DimensionError
from odegrad.core.rng import RngState, gaussian_sample
from odegrad.core.tensor import Tensor, as_tensor

DatasetName = Literal["two_circles", "two_moons", "gaussian_mixture"]

# Constants
CIRCLE_RADII = (1.0, 2.5)
MOON_SHIFT = np.array([-0.5, -0.25])
DEFAULT_NOISE = 0.08
LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class GaussianMixture:
    """Isotropic Gaussian mixture sum_k w_k N(mu_k, s_k^2 I)."""

    means: Tensor
    stds: Tensor
    weights: Tensor

    def __post_init__(self) -> None:
        means = np.atleast_2d(as_tensor(self.means))
        stds = np.atleast_1d(as_tensor(self.stds))
        weights = np.atleast_1d(as_tensor(self.weights))
        k = means.shape[0]
        if stds.shape != (k,) or weights.shape != (k,):
            raise DimensionError(
                "GaussianMixture", f"{k} stds and weights", (stds.shape, weights.shape)
            )
        if np.any(stds <= 0) or np.any(weights < 0) or weights.sum() <= 0:
            raise ArgumentError("GaussianMixture: stds must be > 0 and weights >= 0")
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "stds", stds)
        object.__setattr__(self, "weights", weights / weights.sum())

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def _component_logpdf(self, x: Tensor) -> Tensor:
        # (n, K)
        sq = np.sum((x[:, None, :] - self.means[None, :, :]) ** 2, axis=-1)
        var = self.stds**2
        return np.log(self.weights) - 0.5 * sq / var - 0.5 * self.dim * (LOG_2PI + np.log(var))

    def log_prob(self, x: Tensor) -> Tensor:
        """Exact log-density per row of x[n, D]."""
        x = np.atleast_2d(as_tensor(x))
        return logsumexp(self._component_logpdf(x), axis=1)

    def score(self, x: Tensor) -> Tensor:
        """Gradient of log_prob with respect to x, shape (n, D)."""
        x = np.atleast_2d(as_tensor(x))
        resp = softmax(self._component_logpdf(x), axis=1)
        pull = (self.means[None, :, :] - x[:, None, :]) / (self.stds**2)[None, :, None]
        return np.einsum("nk,nkd->nd", resp, pull)

    def sample(self, rng: RngState, n: int) -> Tensor:
        components = rng.generator.choice(len(self.weights), size=n, p=self.weights)
        noise = gaussian_sample(rng, (n, self.dim))
        return self.means[components] + self.stds[components, None] * noise


def standard_normal(dim: int) -> GaussianMixture:
    return GaussianMixture(np.zeros((1, dim)), np.ones(1), np.ones(1))


def default_mixture() -> GaussianMixture:
    """Three unit-weight components on a circle of radius 2."""
    angles = np.deg2rad([90.0, 210.0, 330.0])
    means = 2.0 * np.column_stack([np.cos(angles), np.sin(angles)])
    return GaussianMixture(means, np.full(3, 0.5), np.ones(3))


def two_circles(rng: RngState, n: int, noise: float = DEFAULT_NOISE) -> Tensor:
    """Equal mixture of two concentric rings with Gaussian radial noise."""
    ring = rng.integers(0, 2, n)
    radius = np.asarray(CIRCLE_RADII)[ring] + gaussian_sample(rng, n, std=noise)
    angle = rng.uniform(0.0, 2.0 * np.pi, n)
    return radius[:, None] * np.column_stack([np.cos(angle), np.sin(angle)])


def two_moons(rng: RngState, n: int, noise: float = DEFAULT_NOISE) -> Tensor:
    """Two interleaving half circles, recentred on the origin."""
    upper = rng.integers(0, 2, n).astype(bool)
    s = rng.uniform(0.0, np.pi, n)
    points = np.where(
        upper[:, None],
        np.column_stack([np.cos(s), np.sin(s)]),
        np.column_stack([1.0 - np.cos(s), 0.5 - np.sin(s)]),
    )
    return points + MOON_SHIFT + gaussian_sample(rng, (n, 2), std=noise)


@dataclass(frozen=True)
class Dataset2D:
    """Named sample generator; gaussian_mixture also carries its exact density."""

    name: DatasetName
    noise: float = DEFAULT_NOISE
    mixture: GaussianMixture | None = field(default=None)

    @property
    def has_density(self) -> bool:
        return self.mixture is not None

    @property
    def dim(self) -> int:
        return self.mixture.dim if self.mixture is not None else 2

    def sample(self, rng: RngState, n: int) -> Tensor:
        if n < 1:
            raise ArgumentError(f"{self.name}: n must be >= 1, got {n}")
        if self.name == "two_circles":
            return two_circles(rng, n, self.noise)
        if self.name == "two_moons":
            return two_moons(rng, n, self.noise)
        return self.mixture.sample(rng, n)

    def _require_density(self) -> GaussianMixture:
        if self.mixture is None:
            raise ArgumentError(f"dataset {self.name} has no exact density")
        return self.mixture

    def log_prob(self, x: Tensor) -> Tensor:
        return self._require_density().log_prob(x)

    def score(self, x: Tensor) -> Tensor:
        return self._require_density().score(x)


def get_dataset(
    name: str, noise: float = DEFAULT_NOISE, mixture: GaussianMixture | None = None
) -> Dataset2D:
    """Look up a dataset by name.

    Raises:
        ArgumentError: If the name is unknown
    """
    if name in ("two_circles", "two_moons"):
        return Dataset2D(name, noise)
    if name == "gaussian_mixture":
        return Dataset2D(name, noise, mixture if mixture is not None else default_mixture())
    raise ArgumentError(
        f"unknown dataset {name!r}; expected two_circles, two_moons or gaussian_mixture"
    )


def make_dataset(name: str, rng: RngState, n: int, **params) -> Tensor:
    """Draw n points from the named dataset."""
    return get_dataset(name, **params).sample(rng, n)
