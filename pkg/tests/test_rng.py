"""Tests for the explicit random state."""

import numpy as np
import pytest

from odegrad.core.exceptions import ArgumentError
from odegrad.core.rng import RngState, gaussian_sample


def test_same_seed_same_stream() -> None:
    """Test that identical seeds give identical draws."""
    a = gaussian_sample(RngState(7), (3, 2))
    b = gaussian_sample(RngState(7), (3, 2))
    np.testing.assert_array_equal(a, b)


def test_draws_advance_the_state() -> None:
    """Test that consecutive draws differ and the counter moves."""
    rng = RngState(0)
    before = rng.counter
    first = gaussian_sample(rng, 4)
    second = gaussian_sample(rng, 4)
    assert rng.counter != before
    assert not np.array_equal(first, second)


def test_mean_and_std_are_applied() -> None:
    """Test the location and scale of the draw."""
    x = gaussian_sample(RngState(1), 20_000, mean=3.0, std=0.5)
    assert x.mean() == pytest.approx(3.0, abs=0.02)
    assert x.std() == pytest.approx(0.5, abs=0.02)


def test_negative_std_raises() -> None:
    """Test that a negative std is rejected."""
    with pytest.raises(ArgumentError):
        gaussian_sample(RngState(0), 3, std=-1.0)


def test_spawn_is_deterministic_and_independent() -> None:
    """Test that children depend only on the seed and differ from each other."""
    a, b = RngState(3).spawn(2)
    c, _ = RngState(3).spawn(2)
    assert a.seed == c.seed
    assert a.seed != b.seed


def test_choice_draws_distinct_indices() -> None:
    """Test sampling without replacement."""
    picked = RngState(0).choice(10, 10)
    assert sorted(picked.tolist()) == list(range(10))
