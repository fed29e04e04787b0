"""Tests for the optimizers."""

import numpy as np
import pytest

from odegrad.core.exceptions import DimensionError, NonFiniteError
from odegrad.core.optim import (
    AdamState,
    OptimizerConfig,
    RMSpropState,
    adam_step,
    init_optimizer,
    optimizer_step,
    rmsprop_step,
)


def test_adam_first_step_moves_by_lr() -> None:
    """Test that the bias-corrected first Adam step has size lr per coordinate."""
    theta = np.array([1.0, -2.0])
    state = AdamState.init(theta, lr=0.1)
    state, new = adam_step(state, theta, np.array([3.0, -0.5]))
    np.testing.assert_allclose(new, [0.9, -1.9], rtol=1e-6)
    assert state.step == 1


def test_rmsprop_step() -> None:
    """Test one RMSprop update against the formula."""
    theta = np.zeros(1)
    state = RMSpropState.init(theta, lr=0.01, decay=0.9)
    state, new = rmsprop_step(state, theta, np.array([2.0]))
    expected = -0.01 * 2.0 / (np.sqrt(0.1 * 4.0) + state.eps)
    np.testing.assert_allclose(new, [expected])


def test_adam_minimizes_quadratic() -> None:
    """Test that Adam converges on a convex quadratic."""
    theta = np.array([5.0, -3.0])
    state = init_optimizer(OptimizerConfig(lr=0.1), theta)
    for _ in range(1000):
        state, theta = optimizer_step(state, theta, 2.0 * theta)
    np.testing.assert_allclose(theta, 0.0, atol=1e-2)


def test_config_default_learning_rates() -> None:
    """Test the documented default learning rates."""
    assert OptimizerConfig().learning_rate == pytest.approx(1e-3)
    assert OptimizerConfig(name="rmsprop").learning_rate == pytest.approx(1e-4)
    assert isinstance(init_optimizer(OptimizerConfig(name="rmsprop"), np.zeros(2)), RMSpropState)


def test_shape_mismatch_raises() -> None:
    """Test that a gradient of the wrong shape is rejected."""
    theta = np.zeros(3)
    with pytest.raises(DimensionError):
        adam_step(AdamState.init(theta), theta, np.zeros(2))


def test_non_finite_gradient_raises() -> None:
    """Test that NaN gradients are rejected."""
    theta = np.zeros(2)
    with pytest.raises(NonFiniteError):
        rmsprop_step(RMSpropState.init(theta), theta, np.array([np.nan, 0.0]))
