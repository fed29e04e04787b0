"""Tests for the latent ODE, its ELBO and the recurrent baselines."""

from pathlib import Path

import numpy as np
import pytest

from odegrad.core.exceptions import ArgumentError, DimensionError
from odegrad.core.optim import OptimizerConfig
from odegrad.core.rng import RngState, gaussian_sample
from odegrad.dynamics.checks import central_difference
from odegrad.dynamics.serialization import encode_dynamics
from odegrad.latent import (
    LatentOdeModel,
    RnnBaseline,
    decode_trajectory,
    elbo,
    elbo_and_grad,
    encode,
    gaussian_kl,
    generate_spirals,
    load_checkpoint,
    predictive_rmse,
    reconstruct,
    rmse,
    save_checkpoint,
    subsample,
    train_latent_ode,
    union_grid,
    write_spirals_csv,
)
from odegrad.solvers import SolveConfig
from tests.fixtures.datasets import tiny_spirals
from tests.fixtures.dynamics import make_dynamics

FIXED = SolveConfig(method="rk4", step_size=0.01)


def small_model(seed: int = 0) -> LatentOdeModel:
    return LatentOdeModel.init(
        RngState(seed), latent_dim=2, rnn_hidden=4, dyn_hidden=5, dec_hidden=5
    )


def sampled_indices(model: LatentOdeModel) -> list[int]:
    """A few parameter indices from every segment."""
    picked = set()
    for part in model.slices().values():
        picked.update({part.start, part.start + (part.stop - part.start) // 2, part.stop - 1})
    return sorted(picked)


def test_backward_encoding_equals_reversed_forward_encoding() -> None:
    """Test that backward encoding is forward encoding of the reversed sequence."""
    model = small_model()
    data = tiny_spirals()
    obs, times = data.observations[0], data.times[0]
    mu_b, sigma_b = encode(model, obs, times, backward=True)
    mu_f, sigma_f = encode(model, obs[::-1], times[::-1], backward=False)
    np.testing.assert_allclose(mu_b, mu_f, atol=1e-12)
    np.testing.assert_allclose(sigma_b, sigma_f, atol=1e-12)
    assert np.all(sigma_b > 0)


def test_encode_batch_matches_single_sequences() -> None:
    """Test that batched encoding matches encoding each sequence alone."""
    model = small_model(1)
    data = tiny_spirals(seed=1)
    mu, sigma = encode(model, data.observations, data.times)
    for j in range(data.n_traj):
        mu_j, sigma_j = encode(model, data.observations[j], data.times[j])
        np.testing.assert_allclose(mu[j], mu_j, atol=1e-12)
        np.testing.assert_allclose(sigma[j], sigma_j, atol=1e-12)


def test_encode_rejects_bad_sequences() -> None:
    """Test that empty or unsorted sequences are rejected."""
    model = small_model()
    with pytest.raises(ArgumentError):
        encode(model, np.zeros((0, 2)), np.zeros(0))
    with pytest.raises(ArgumentError):
        encode(model, np.zeros((3, 2)), np.array([0.0, 2.0, 1.0]))
    with pytest.raises(DimensionError):
        encode(model, np.zeros((3, 3)), np.arange(3.0))


def test_elbo_gradient_matches_finite_differences() -> None:
    """Test the ELBO gradient on parameters from every segment."""
    model = small_model(2)
    data = tiny_spirals(seed=2, n_traj=2, n_time=10, k=4)
    eps = gaussian_sample(RngState(3), (2, model.latent_dim))
    result = elbo_and_grad(model, data, eps, FIXED)
    indices = sampled_indices(model)

    def value(theta):
        return elbo_and_grad(model.with_theta(theta), data, eps, FIXED, with_grad=False).value

    approx = central_difference(value, model.theta, 1e-6, indices=indices)
    np.testing.assert_allclose(result.grad[indices], approx[indices], rtol=1e-4, atol=1e-6)
    assert result.nfe_backward > 0


def test_elbo_parts() -> None:
    """Test that the ELBO is the log-likelihood minus the KL term."""
    model = small_model(4)
    data = tiny_spirals(seed=4)
    eps = np.zeros((data.n_traj, model.latent_dim))
    result = elbo_and_grad(model, data, eps, with_grad=False)
    assert result.value == pytest.approx(result.log_likelihood - result.kl)
    assert np.isfinite(elbo(model, data.observations[0], data.times[0], RngState(5)))


def test_gaussian_kl_of_standard_normal_is_zero() -> None:
    """Test the closed-form KL against the prior."""
    assert gaussian_kl(np.zeros(3), np.ones(3)) == 0.0
    assert gaussian_kl(np.ones(2), np.ones(2)) == pytest.approx(1.0)


def test_union_grid_positions() -> None:
    """Test the merged time grid and where each observation lands on it."""
    grid, positions = union_grid(np.array([[0.5, 1.0], [0.2, 1.0]]), 0.0)
    np.testing.assert_array_equal(grid, [0.0, 0.2, 0.5, 1.0])
    np.testing.assert_array_equal(positions, [[2, 3], [1, 3]])


def test_decode_and_predict_shapes() -> None:
    """Test decoding shapes and extrapolation past the observations."""
    model = small_model(6)
    data = tiny_spirals(seed=6)
    mu, _ = encode(model, data.observations, data.times)
    decoded = decode_trajectory(model, mu, np.array([0.0, 1.0, 2.0]))
    assert decoded.shape == (3, data.n_traj, 2)
    assert decode_trajectory(model, mu, np.array([0.0])).shape == (1, data.n_traj, 2)
    forecast = model.predict(data, np.array([11.0, 12.0]))
    assert forecast.shape == (data.n_traj, 2, 2)
    with pytest.raises(ArgumentError):
        model.predict(data, np.array([0.0, 1.0]))


def test_checkpoint_round_trip(tmp_path: Path) -> None:
    """Test that a saved model loads with identical parameters and sizes."""
    model = LatentOdeModel.init(RngState(7), latent_dim=3, rnn_hidden=6, t0=-0.5)
    path = save_checkpoint(model, tmp_path / "model.bin")
    loaded = load_checkpoint(path)
    np.testing.assert_array_equal(loaded.theta, model.theta)
    assert (loaded.t0, loaded.latent_dim, loaded.rnn_hidden) == (-0.5, 3, 6)
    assert loaded.noise_std == pytest.approx(model.noise_std)


def test_plain_dynamics_file_is_not_a_latent_checkpoint(tmp_path: Path) -> None:
    """Test that a checkpoint without the latent blocks is rejected."""
    path = tmp_path / "dynamics.bin"
    path.write_bytes(encode_dynamics(make_dynamics("mlp")))
    with pytest.raises(ArgumentError):
        load_checkpoint(path)


def test_training_reports_every_epoch() -> None:
    """Test the training log, the epoch callback and reconstruction shapes."""
    model = small_model(8)
    data = tiny_spirals(seed=8)
    seen = []
    result = train_latent_ode(
        model,
        data,
        3,
        RngState(9),
        OptimizerConfig(lr=0.01),
        batch_size=2,
        cfg=SolveConfig(rtol=1e-5, atol=1e-5),
        on_epoch=seen.append,
    )
    assert [record.epoch for record in seen] == [0, 1, 2]
    assert all(np.isfinite(record.loss) and record.nfe_backward > 0 for record in result.log)
    assert reconstruct(result.model, data).shape == data.observations.shape


def test_spiral_generation() -> None:
    """Test spiral shapes, balanced directions and subsampling."""
    data = generate_spirals(RngState(10), 6, 30)
    assert data.observations.shape == (6, 30, 2)
    assert sorted(data.labels.tolist()) == [0, 0, 0, 1, 1, 1]
    irregular = subsample(data, RngState(11), 7)
    assert irregular.times.shape == (6, 7)
    assert np.all(np.diff(irregular.times, axis=1) > 0)
    with pytest.raises(ArgumentError):
        generate_spirals(RngState(0), 3, 10)
    with pytest.raises(ArgumentError):
        subsample(data, RngState(0), 31)


def test_write_spirals_csv(tmp_path: Path) -> None:
    """Test one CSV file per trajectory."""
    paths = write_spirals_csv(generate_spirals(RngState(12), 2, 5), tmp_path)
    assert [p.name for p in paths] == ["spiral_0000.csv", "spiral_0001.csv"]
    assert paths[0].read_text().splitlines()[0] == "t,x0,x1,label"


@pytest.mark.parametrize("with_gaps", [False, True])
def test_rnn_gradient_matches_finite_differences(with_gaps: bool) -> None:
    """Test the one-step-ahead NLL gradient of the baseline."""
    model = RnnBaseline.init(RngState(13), with_gaps, hidden=3)
    data = tiny_spirals(seed=13, n_traj=2, k=5)
    _, grad = model.nll_and_grad(data)

    def value(theta):
        return model.with_theta(theta).nll_and_grad(data)[0]

    np.testing.assert_allclose(
        grad, central_difference(value, model.theta, 1e-6), rtol=1e-5, atol=1e-8
    )
    assert model.predict(data, np.array([11.0, 12.0, 13.0])).shape == (2, 3, 2)


def test_rmse_checks_shapes() -> None:
    """Test the RMSE value and its shape check."""
    assert rmse(np.ones((2, 2)), np.zeros((2, 2))) == pytest.approx(1.0)
    with pytest.raises(DimensionError):
        rmse(np.ones(3), np.ones(2))


class ConstantForecaster:
    def predict(self, data, query_times):
        return np.zeros((data.n_traj, len(query_times), 2))


def test_predictive_rmse() -> None:
    """Test forecasts are scored against the truth over every trajectory and time."""
    data = tiny_spirals()
    horizon = np.array([11.0, 12.0, 13.0])
    truth = np.full((data.n_traj, 3, 2), 2.0)
    assert predictive_rmse(ConstantForecaster(), data, horizon, truth) == pytest.approx(2.0)
