"""Spiral extrapolation: latent ODE against recurrent baselines on irregular samples."""

import logging
from dataclasses import dataclass

import numpy as np

from odegrad.core.optim import OptimizerConfig
from odegrad.core.rng import RngState
from odegrad.core.tensor import Tensor
from odegrad.experiments.config import SpiralsConfig
from odegrad.experiments.plots import Series, emit_svg
from odegrad.experiments.writer import RunWriter
from odegrad.latent.metrics import rmse
from odegrad.latent.model import (
    LatentOdeModel,
    checkpoint_bytes,
    decode_trajectory,
    encode,
    latent_trajectory,
)
from odegrad.latent.rnn_baseline import rnn_baseline
from odegrad.latent.spirals import IrregularDataset, SpiralDataset, generate_spirals, subsample
from odegrad.latent.training import EpochRecord, train_latent_ode
from odegrad.solvers.config import SolveConfig

logger = logging.getLogger(__name__)

# Constants
RMSE_HEADER = ("n_obs", "latent_ode", "rnn", "rnn_time_gaps")
PLOTTED_TRAJECTORIES = 4


@dataclass(frozen=True)
class SpiralSplit:
    """Observation window and extrapolation horizon of one generated set."""

    full: SpiralDataset
    observed: SpiralDataset
    horizon_times: Tensor
    horizon_truth: Tensor

    @classmethod
    def halves(cls, data: SpiralDataset) -> "SpiralSplit":
        half = data.n_time // 2
        return cls(data, data.window(0, half), data.times[half:], data.truth[:, half:])


@dataclass(frozen=True)
class RmseRow:
    n_obs: int
    latent_ode: float
    rnn: float
    rnn_time_gaps: float

    def as_row(self) -> tuple:
        return (self.n_obs, self.latent_ode, self.rnn, self.rnn_time_gaps)


def _write_trajectories(
    writer: RunWriter,
    model: LatentOdeModel,
    test: SpiralSplit,
    data: IrregularDataset,
    cfg: SolveConfig,
) -> None:
    """Reconstructions and extrapolations over the full grid, plus latent projections."""
    shown = np.arange(min(PLOTTED_TRAJECTORIES, data.n_traj))
    subset = data.batch(shown)
    mu, _ = encode(model, subset.observations, subset.times)
    times = test.full.times
    grid = times if times[0] == model.t0 else np.concatenate([[model.t0], times])
    offset = len(grid) - len(times)
    decoded = decode_trajectory(model, mu, grid, cfg)[offset:]
    latent = latent_trajectory(model, mu, grid, cfg).states[offset:]
    truth = test.full.truth[shown]

    rows = [
        (int(j), t, *decoded[i, j], *truth[j, i])
        for j in range(len(shown))
        for i, t in enumerate(times)
    ]
    writer.write_table(
        "trajectories.csv", ("traj", "t", "pred_x0", "pred_x1", "true_x0", "true_x1"), rows
    )
    series = []
    for j in range(len(shown)):
        series.append(Series(decoded[:, j, 0], decoded[:, j, 1], label=f"model {j}"))
        series.append(Series(truth[j, :, 0], truth[j, :, 1], label=f"truth {j}"))
    writer.write_svg(
        "trajectories.svg",
        emit_svg(
            series, "line", title="Reconstruction and extrapolation", xlabel="x0", ylabel="x1"
        ),
    )

    columns = min(model.latent_dim, 2)
    rows = [
        (int(j), t, *latent[i, j, :columns])
        for j in range(len(shown))
        for i, t in enumerate(times)
    ]
    writer.write_table("latent.csv", ("traj", "t", "z0", "z1")[: 2 + columns], rows)
    if columns == 2:
        series = [
            Series(latent[:, j, 0], latent[:, j, 1], label=f"trajectory {j}")
            for j in range(len(shown))
        ]
        writer.write_svg(
            "latent.svg",
            emit_svg(series, "line", title="Latent trajectories", xlabel="z0", ylabel="z1"),
        )


def run_spirals(config: SpiralsConfig, writer: RunWriter) -> list[RmseRow]:
    """Train and score every model at each observation count; write the RMSE table."""
    data_rng, test_rng, sample_rng, model_rng = RngState(config.seed).spawn(4)
    train = SpiralSplit.halves(
        generate_spirals(data_rng, config.n_traj, config.n_time, config.noise_std)
    )
    test = SpiralSplit.halves(
        generate_spirals(test_rng, config.n_test, config.n_time, config.noise_std)
    )
    cfg = config.solve_config()
    optimizer = OptimizerConfig(lr=config.lr)
    table = []
    step = 0
    model = None
    test_data = None

    for n_obs in config.n_obs:
        train_data = subsample(train.observed, sample_rng, n_obs)
        test_data = subsample(test.observed, sample_rng, n_obs)
        init_rng, train_rng, rnn_rng, gap_rng = model_rng.spawn(4)
        model = LatentOdeModel.init(
            init_rng,
            latent_dim=config.latent_dim,
            rnn_hidden=config.rnn_hidden,
            dyn_hidden=config.dyn_hidden,
            dec_hidden=config.dec_hidden,
            t0=float(train.full.times[0]),
        )

        def log_epoch(record: EpochRecord, base: int = step) -> None:
            writer.log_metrics(
                base + record.epoch,
                loss=record.loss,
                nfe_f=record.nfe_forward,
                nfe_b=record.nfe_backward,
                rmse=record.rmse,
            )

        result = train_latent_ode(
            model,
            train_data,
            config.epochs,
            train_rng,
            optimizer,
            config.batch_size,
            cfg,
            on_epoch=log_epoch,
        )
        model = result.model
        step += config.epochs
        latent_rmse = rmse(model.predict(test_data, test.horizon_times, cfg), test.horizon_truth)

        baselines = []
        for with_gaps, rng in ((False, rnn_rng), (True, gap_rng)):
            _, score = rnn_baseline(
                train_data,
                with_gaps,
                config.rnn_epochs,
                rng,
                test.horizon_times,
                test.horizon_truth,
                optimizer,
                config.rnn_hidden,
                test=test_data,
            )
            baselines.append(score)
        row = RmseRow(n_obs, latent_rmse, *baselines)
        table.append(row)
        logger.info(
            f"n_obs={n_obs}: latent ODE {latent_rmse:.4f}, RNN {baselines[0]:.4f}, "
            f"RNN with gaps {baselines[1]:.4f}"
        )
        if latent_rmse >= min(baselines):
            logger.warning(f"n_obs={n_obs}: latent ODE does not beat the RNN baselines")

    writer.write_table("rmse.csv", RMSE_HEADER, (row.as_row() for row in table))
    latent_scores = [row.latent_ode for row in sorted(table, key=lambda r: r.n_obs)]
    if any(later > earlier for earlier, later in zip(latent_scores, latent_scores[1:])):
        logger.warning(f"Latent ODE RMSE does not decrease with more observations: {latent_scores}")

    if model is not None:
        _write_trajectories(writer, model, test, test_data, cfg)
        writer.write_binary("latent_ode.bin", checkpoint_bytes(model))
    return table
