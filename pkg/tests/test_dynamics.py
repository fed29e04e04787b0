"""Tests for dynamics architectures, VJPs and Jacobian traces."""

import numpy as np
import pytest

from odegrad.core.exceptions import ArgumentError, DimensionError
from odegrad.core.rng import RngState, gaussian_sample
from odegrad.dynamics.architectures import (
    build_dynamics,
    build_linear,
    build_mlp_dynamics,
)
from odegrad.dynamics.checks import central_difference, fd_jacobian, fd_vjp
from odegrad.dynamics.layers import Mlp
from tests.fixtures.dynamics import ARCHITECTURES, FLOW_ARCHITECTURES, make_dynamics, rotation


@pytest.mark.parametrize("name", ARCHITECTURES)
def test_vjp_matches_finite_differences(name: str) -> None:
    """Test every VJP component against central differences."""
    f = make_dynamics(name, seed=1)
    rng = RngState(2)
    z = gaussian_sample(rng, 2)
    a = gaussian_sample(rng, 2)
    exact = f.vjp(z, 0.3, a)
    approx = fd_vjp(f, z, 0.3, a, eps=1e-6)
    np.testing.assert_allclose(exact.vjp_z, approx.vjp_z, rtol=1e-5, atol=1e-8)
    np.testing.assert_allclose(exact.vjp_theta, approx.vjp_theta, rtol=1e-5, atol=1e-8)
    assert exact.vjp_t == pytest.approx(approx.vjp_t, rel=1e-5, abs=1e-8)


@pytest.mark.parametrize("name", ARCHITECTURES)
def test_batched_vjp_sums_parameter_gradients(name: str) -> None:
    """Test that a batch VJP equals the per-sample VJPs with summed theta and t parts."""
    f = make_dynamics(name, seed=3)
    rng = RngState(4)
    z = gaussian_sample(rng, (3, 2))
    a = gaussian_sample(rng, (3, 2))
    batch = f.vjp(z, 0.7, a)
    singles = [f.vjp(z[i], 0.7, a[i]) for i in range(3)]
    np.testing.assert_allclose(batch.vjp_z, np.stack([s.vjp_z for s in singles]), atol=1e-12)
    np.testing.assert_allclose(
        batch.vjp_theta, np.sum([s.vjp_theta for s in singles], axis=0), atol=1e-12
    )
    assert batch.vjp_t == pytest.approx(sum(s.vjp_t for s in singles), abs=1e-12)


@pytest.mark.parametrize("name", ARCHITECTURES)
def test_trace_matches_jacobian(name: str) -> None:
    """Test the exact trace against the trace of a finite-difference Jacobian."""
    f = make_dynamics(name, seed=5)
    z = gaussian_sample(RngState(6), 2)
    expected = np.trace(fd_jacobian(f, z, 0.4, eps=1e-6))
    assert f.jacobian_trace(z, 0.4) == pytest.approx(expected, rel=1e-6, abs=1e-8)
    assert f.basis_trace(z, 0.4) == pytest.approx(expected, rel=1e-6, abs=1e-8)


@pytest.mark.parametrize("name", FLOW_ARCHITECTURES)
def test_trace_vjp_matches_finite_differences(name: str) -> None:
    """Test gradients of the weighted trace sum against central differences."""
    f = make_dynamics(name, seed=7)
    rng = RngState(8)
    z = gaussian_sample(rng, (2, 2))
    g = gaussian_sample(rng, 2)
    t = 0.6
    exact = f.trace_vjp(z, t, g)

    def weighted(fn, zz, tt):
        return float(g @ fn.jacobian_trace(zz, tt))

    d_z = central_difference(lambda zz: weighted(f, zz, t), z, 1e-6)
    d_theta = central_difference(lambda th: weighted(f.with_theta(th), z, t), f.theta, 1e-6)
    d_t = central_difference(lambda tt: weighted(f, z, float(tt[0])), [t], 1e-6)[0]
    np.testing.assert_allclose(exact.vjp_z, d_z, rtol=1e-5, atol=1e-8)
    np.testing.assert_allclose(exact.vjp_theta, d_theta, rtol=1e-5, atol=1e-8)
    assert exact.vjp_t == pytest.approx(d_t, rel=1e-5, abs=1e-8)


def test_hamiltonian_trace_is_zero() -> None:
    """Test that the split Hamiltonian field is divergence free."""
    f = make_dynamics("hamiltonian_split", seed=9, dim=4)
    z = gaussian_sample(RngState(10), (5, 4))
    np.testing.assert_array_equal(f.jacobian_trace(z, 0.0), np.zeros(5))
    np.testing.assert_allclose(f.basis_trace(z, 0.0), np.zeros(5), atol=1e-12)


def test_mlp_trace_gradient_is_unsupported() -> None:
    """Test that MLP dynamics refuse closed-form trace gradients."""
    f = make_dynamics("mlp")
    with pytest.raises(ArgumentError):
        f.trace_vjp(np.zeros(2), 0.0, 1.0)


def test_linear_eval_and_trace() -> None:
    """Test linear dynamics against the matrix it wraps."""
    f = build_linear(rotation(2.0))
    np.testing.assert_allclose(f.eval(np.array([1.0, 0.0]), 0.0), [0.0, 2.0])
    assert f.jacobian_trace(np.ones(2), 0.0) == 0.0


def test_state_dimension_is_checked() -> None:
    """Test that states of the wrong size raise DimensionError."""
    f = make_dynamics("planar")
    with pytest.raises(DimensionError):
        f.eval(np.zeros(3), 0.0)
    with pytest.raises(DimensionError):
        f.vjp(np.zeros(2), 0.0, np.zeros(3))


def test_parameter_count_is_checked() -> None:
    """Test that a theta of the wrong size raises DimensionError."""
    f = make_dynamics("linear")
    with pytest.raises(DimensionError):
        f.with_theta(np.zeros(3))


def test_hamiltonian_needs_even_dimension() -> None:
    """Test that an odd state dimension is rejected."""
    with pytest.raises(DimensionError):
        build_dynamics("hamiltonian_split", 3, RngState(0))


def test_unknown_architecture() -> None:
    """Test that an unknown architecture name raises ArgumentError."""
    with pytest.raises(ArgumentError):
        build_dynamics("transformer", 2, RngState(0))


def test_zero_initialized_mlp_is_stationary() -> None:
    """Test that test-mode initialization gives a zero field."""
    f = build_mlp_dynamics(3, [4], None, zero=True)
    np.testing.assert_array_equal(f.eval(np.ones(3), 1.0), np.zeros(3))


def test_mlp_backward_matches_finite_differences() -> None:
    """Test the layer backward pass on a two-layer network with an output activation."""
    net = Mlp((3, 5, 2), activation="softplus", output_activation="tanh")
    rng = RngState(11)
    theta = net.init_theta(rng)
    x = gaussian_sample(rng, (4, 3))
    g = gaussian_sample(rng, (4, 2))
    _, cache = net.forward(theta, x)
    grad_x, grad_theta = net.backward(theta, cache, g)
    np.testing.assert_allclose(
        grad_x,
        central_difference(lambda xx: float(np.sum(g * net(theta, xx))), x, 1e-6),
        rtol=1e-5,
        atol=1e-8,
    )
    np.testing.assert_allclose(
        grad_theta,
        central_difference(lambda th: float(np.sum(g * net(th, x))), theta, 1e-6),
        rtol=1e-5,
        atol=1e-8,
    )
