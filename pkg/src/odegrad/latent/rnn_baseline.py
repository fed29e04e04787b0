"""Next-step prediction RNN, the recurrent baseline for irregular time series."""

import logging
from dataclasses import dataclass, replace

import numpy as np

from odegrad.core.exceptions import ArgumentError, DimensionError, TrainingDivergenceError
from odegrad.core.optim import OptimizerConfig, init_optimizer, optimizer_step
from odegrad.core.rng import RngState
from odegrad.core.tensor import Tensor, as_tensor
from odegrad.dynamics.layers import Mlp
from odegrad.latent.metrics import predictive_rmse
from odegrad.latent.networks import GruCell
from odegrad.latent.spirals import IrregularDataset

logger = logging.getLogger(__name__)

LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class RnnBaseline:
    """GRU reading [x_i] or [x_i, t_{i+1} - t_i] and predicting a Gaussian over x_{i+1}.

    theta is [GRU, head]; the head maps the hidden state to (mean, log std).
    """

    theta: Tensor
    with_time_gaps: bool
    obs_dim: int = 2
    hidden: int = 25

    def __post_init__(self) -> None:
        theta = np.array(self.theta, dtype=np.float64).ravel()
        if theta.shape != (self.param_count,):
            raise DimensionError("RNN baseline parameters", (self.param_count,), theta.shape)
        object.__setattr__(self, "theta", theta)

    @property
    def cell(self) -> GruCell:
        return GruCell(self.obs_dim + int(self.with_time_gaps), self.hidden)

    @property
    def head(self) -> Mlp:
        return Mlp((self.hidden, 2 * self.obs_dim))

    @property
    def param_count(self) -> int:
        return self.cell.param_count + self.head.param_count

    @classmethod
    def init(
        cls, rng: RngState, with_time_gaps: bool, obs_dim: int = 2, hidden: int = 25
    ) -> "RnnBaseline":
        cell = GruCell(obs_dim + int(with_time_gaps), hidden)
        theta = np.concatenate([cell.init_theta(rng), Mlp((hidden, 2 * obs_dim)).init_theta(rng)])
        return cls(theta, with_time_gaps, obs_dim, hidden)

    def with_theta(self, theta: Tensor) -> "RnnBaseline":
        return replace(self, theta=theta)

    def _parts(self) -> tuple[Tensor, Tensor]:
        k = self.cell.param_count
        return self.theta[:k], self.theta[k:]

    def _inputs(self, values: Tensor, gaps: Tensor) -> Tensor:
        """Step inputs (T, n, input_dim) from values (n, T, obs_dim) and gaps (n, T)."""
        if self.with_time_gaps:
            values = np.concatenate([values, gaps[..., None]], axis=-1)
        return np.swapaxes(values, 0, 1)

    def nll_and_grad(self, data: IrregularDataset) -> tuple[float, Tensor]:
        """Mean over trajectories of the summed one-step-ahead Gaussian NLL."""
        obs, times = as_tensor(data.observations), as_tensor(data.times)
        n, k = times.shape
        if k < 2:
            raise ArgumentError("RNN baseline needs at least two observations per trajectory")
        cell_theta, head_theta = self._parts()
        xs = self._inputs(obs[:, :-1], np.diff(times, axis=1))
        states, caches = self.cell.run(cell_theta, xs, np.zeros((n, self.hidden)))
        flat = states.reshape(-1, self.hidden)
        out, head_cache = self.head.forward(head_theta, flat)
        mean, log_std = out[:, : self.obs_dim], out[:, self.obs_dim :]
        target = np.swapaxes(obs[:, 1:], 0, 1).reshape(-1, self.obs_dim)
        std = np.exp(log_std)
        r = (target - mean) / std
        value = float(np.sum(0.5 * r**2 + log_std + 0.5 * LOG_2PI) / n)

        grad_mean = -r / std / n
        grad_log_std = (1.0 - r**2) / n
        grad_flat, grad_head = self.head.backward(
            head_theta, head_cache, np.concatenate([grad_mean, grad_log_std], axis=1)
        )
        _, _, grad_cell = self.cell.run_backward(
            cell_theta, caches, grad_flat.reshape(states.shape)
        )
        return value, np.concatenate([grad_cell, grad_head])

    def predict(self, data: IrregularDataset, query_times: Tensor) -> Tensor:
        """Iterated one-step predictions at query_times after the last observation.

        Returns:
            Predicted means (n, H, obs_dim)
        """
        obs, times = as_tensor(data.observations), as_tensor(data.times)
        query_times = as_tensor(query_times)
        n = times.shape[0]
        cell_theta, head_theta = self._parts()
        next_times = np.concatenate([times[:, 1:], np.full((n, 1), query_times[0])], axis=1)
        states, _ = self.cell.run(
            cell_theta, self._inputs(obs, next_times - times), np.zeros((n, self.hidden))
        )
        h = states[-1]
        predictions = []
        for j in range(len(query_times)):
            mean = self.head(head_theta, h)[:, : self.obs_dim]
            predictions.append(mean)
            if j + 1 < len(query_times):
                gap = np.full((n, 1), query_times[j + 1] - query_times[j])
                x = self._inputs(mean[:, None, :], gap)[0]
                h, _ = self.cell.step(cell_theta, x, h)
        return np.stack(predictions, axis=1)


def train_rnn_baseline(
    model: RnnBaseline,
    data: IrregularDataset,
    epochs: int,
    rng: RngState,
    optimizer: OptimizerConfig | None = None,
    batch_size: int = 50,
) -> tuple[RnnBaseline, list[float]]:
    """Minibatch Adam on the one-step-ahead NLL.

    Returns:
        Tuple of (trained model, mean NLL per epoch)
    """
    optimizer = optimizer or OptimizerConfig(lr=1e-2)
    state = init_optimizer(optimizer, model.theta)
    losses = []
    for epoch in range(epochs):
        order = rng.choice(data.n_traj, data.n_traj)
        epoch_losses = []
        for start in range(0, data.n_traj, batch_size):
            value, grad = model.nll_and_grad(data.batch(order[start : start + batch_size]))
            if not np.isfinite(value):
                raise TrainingDivergenceError(epoch, value, phase="epoch")
            state, theta = optimizer_step(state, model.theta, grad)
            model = model.with_theta(theta)
            epoch_losses.append(value)
        losses.append(float(np.mean(epoch_losses)))
        logger.verbose(f"rnn baseline epoch {epoch}: nll={losses[-1]:.6f}")
    return model, losses


def rnn_baseline(
    data: IrregularDataset,
    with_time_gaps: bool,
    epochs: int,
    rng: RngState,
    horizon_times: Tensor,
    truth: Tensor,
    optimizer: OptimizerConfig | None = None,
    hidden: int = 25,
    test: IrregularDataset | None = None,
) -> tuple[RnnBaseline, float]:
    """Train a baseline on data and score it on the noise-free horizon.

    Args:
        test: Held-out sequences the forecasts start from (data when None); truth
            belongs to these

    Returns:
        Tuple of (trained model, predictive RMSE over horizon_times)
    """
    model = RnnBaseline.init(rng, with_time_gaps, data.observations.shape[2], hidden)
    model, _ = train_rnn_baseline(model, data, epochs, rng, optimizer)
    return model, predictive_rmse(model, data if test is None else test, horizon_times, truth)
