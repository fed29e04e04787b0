"""Explicit, seedable random number state."""

from dataclasses import dataclass, field

import numpy as np

from odegrad.core.exceptions import ArgumentError
from odegrad.core.tensor import Tensor


@dataclass
class RngState:
    """Seeded PCG64 stream passed explicitly into every sampling operation.

    Identical seeds give identical streams on every platform numpy supports.
    """

    seed: int
    generator: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.generator = np.random.Generator(np.random.PCG64(self.seed))

    @property
    def counter(self) -> int:
        """Number of 128-bit draws consumed from the underlying bit generator."""
        return int(self.generator.bit_generator.state["state"]["state"])

    def spawn(self, n: int) -> list["RngState"]:
        """Derive n independent child streams from this state's seed."""
        children = np.random.SeedSequence(self.seed).spawn(n)
        return [RngState(int(child.generate_state(1, dtype=np.uint64)[0])) for child in children]

    def uniform(self, low: float, high: float, shape: tuple[int, ...] | int) -> Tensor:
        return self.generator.uniform(low, high, size=shape)

    def choice(self, n: int, k: int) -> np.ndarray:
        """k distinct indices from range(n), in random order."""
        return self.generator.choice(n, size=k, replace=False)

    def exponential(self, scale: float, shape: tuple[int, ...] | int) -> Tensor:
        return self.generator.exponential(scale, size=shape)

    def integers(self, low: int, high: int, shape: tuple[int, ...] | int) -> np.ndarray:
        return self.generator.integers(low, high, size=shape)


def gaussian_sample(
    rng: RngState, shape: tuple[int, ...] | int, mean: float = 0.0, std: float = 1.0
) -> Tensor:
    """Draw i.i.d. normal entries.

    Args:
        rng: Random state (advanced by the draw)
        shape: Output shape
        mean: Mean of every entry
        std: Standard deviation of every entry (>= 0)

    Raises:
        ArgumentError: If std is negative
    """
    if std < 0:
        raise ArgumentError(f"gaussian_sample: std must be >= 0, got {std}")
    return mean + std * rng.generator.standard_normal(size=shape)
