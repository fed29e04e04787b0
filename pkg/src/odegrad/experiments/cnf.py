"""Continuous normalizing flow experiment: training, density grids, samples and width sweeps."""

import logging
from collections.abc import Callable

import numpy as np

from odegrad.cnf.datasets import Dataset2D, get_dataset
from odegrad.cnf.density import density_grid, flow_snapshots, forward_sample, log_density
from odegrad.cnf.losses import kl_density_matching_loss, mle_loss
from odegrad.cnf.model import CnfModel
from odegrad.cnf.planar_nf import PlanarFlow, planar_kl_loss_and_grad, train_planar_nf
from odegrad.cnf.training import (
    TRAINING_LOG_HEADER,
    CnfTrainingResult,
    TrainingRecord,
    train_cnf,
)
from odegrad.core.exceptions import ArgumentError, CheckFailure
from odegrad.core.rng import RngState, gaussian_sample
from odegrad.core.tensor import Tensor
from odegrad.dynamics.architectures import build_gated_planar
from odegrad.experiments.config import CnfConfig
from odegrad.experiments.plots import Series, emit_svg
from odegrad.experiments.writer import RunWriter
from odegrad.solvers.config import SolveConfig

logger = logging.getLogger(__name__)

# Constants
REVERSIBILITY_TOLERANCE = 1e-4
EVALUATION_SAMPLES = 1000
COMPARISON_HEADER = ("model", "size", "final_loss")
TASKS = {"density": "density_matching", "mle": "mle"}


def _target(config: CnfConfig) -> Dataset2D:
    dataset = get_dataset(config.dataset, noise=config.noise)
    if config.task == "density" and not dataset.has_density:
        raise ArgumentError(
            f"task=density needs a dataset with an exact density; {config.dataset} has none"
        )
    return dataset


def _train(
    config: CnfConfig,
    target: Dataset2D,
    units: int,
    cfg: SolveConfig,
    on_iteration: Callable[[TrainingRecord], None] | None = None,
) -> CnfTrainingResult:
    """Train a gated planar CNF of width units; every width starts from the same seed."""
    init_rng, train_rng = RngState(config.seed).spawn(2)
    model = CnfModel(build_gated_planar(target.dim, units, init_rng))
    return train_cnf(
        model,
        TASKS[config.task],
        target,
        config.iters,
        config.optimizer("adam"),
        train_rng,
        batch_size=config.batch_size,
        cfg=cfg,
        on_iteration=on_iteration,
    )


def final_loss(model: CnfModel, target: Dataset2D, config: CnfConfig, cfg: SolveConfig) -> float:
    """Loss on a fixed evaluation draw shared by every compared model."""
    rng = RngState(config.seed + 1)
    if config.task == "density":
        return kl_density_matching_loss(model, target, rng, EVALUATION_SAMPLES, cfg)
    return mle_loss(model, target.sample(rng, EVALUATION_SAMPLES), cfg)


def reversibility_error(model: CnfModel, samples: Tensor, logq: Tensor, cfg: SolveConfig) -> float:
    """Largest |log q| difference between sampling and evaluating the same points."""
    return float(np.max(np.abs(log_density(model, samples, cfg) - logq)))


def _density_outputs(
    writer: RunWriter, model: CnfModel, config: CnfConfig, cfg: SolveConfig
) -> None:
    extent = config.grid_extent
    axis, logq = density_grid(model, -extent, extent, config.grid_resolution, cfg)
    rows = [(x, y, logq[i, j]) for i, y in enumerate(axis) for j, x in enumerate(axis)]
    writer.write_table("density_grid.csv", ("x", "y", "logq"), rows)
    writer.write_svg(
        "density.svg",
        emit_svg(Series(axis, axis, z=np.exp(logq)), "heatmap", title="Model density"),
    )


def _sample_outputs(
    writer: RunWriter, model: CnfModel, target: Dataset2D, config: CnfConfig, cfg: SolveConfig
) -> float:
    sample_rng, data_rng, snapshot_rng = RngState(config.seed + 2).spawn(3)
    samples, logq = forward_sample(model, sample_rng, config.n_samples, cfg)
    writer.write_table(
        "samples.csv", ("x", "y", "logq"), np.column_stack([samples, logq]).tolist()
    )
    data = target.sample(data_rng, config.n_samples)
    writer.write_svg(
        "samples.svg",
        emit_svg(
            [
                Series(samples[:, 0], samples[:, 1], label="model"),
                Series(data[:, 0], data[:, 1], label="target"),
            ],
            "scatter",
            title="Samples",
        ),
    )

    if config.snapshot_times:
        snapshots = flow_snapshots(
            model, snapshot_rng, config.n_samples, config.snapshot_times, cfg
        )
        rows = [
            (t, x, y)
            for t, points in zip(config.snapshot_times, snapshots)
            for x, y in points.tolist()
        ]
        writer.write_table("snapshots.csv", ("t", "x", "y"), rows)
        series = [
            Series(points[:, 0], points[:, 1], label=f"t={t:g}")
            for t, points in zip(config.snapshot_times, snapshots)
        ]
        writer.write_svg("snapshots.svg", emit_svg(series, "scatter", title="Flow snapshots"))

    error = reversibility_error(model, samples, logq, cfg)
    if error > REVERSIBILITY_TOLERANCE:
        raise CheckFailure([f"reversibility: max |log q| difference {error:.3g}"])
    logger.info(f"✓ Reversibility check passed (max difference {error:.3g})")
    return error


def width_sweep(
    config: CnfConfig, target: Dataset2D, cfg: SolveConfig, model: CnfModel | None = None
) -> list[tuple[str, int, float]]:
    """Final loss of a CNF trained at each width in sweep_units, all from the same seed.

    model, when given, stands in for the width config.units so it is not trained twice.
    """
    rows = []
    for units in config.sweep_units:
        if model is not None and units == config.units:
            trained = model
        else:
            trained = _train(config, target, units, cfg).model
        rows.append(("cnf", units, final_loss(trained, target, config, cfg)))
    losses = [row[2] for row in rows]
    if any(later > earlier for earlier, later in zip(losses, losses[1:])):
        logger.warning(f"Final loss is not monotone in width: {losses}")
    return rows


def _comparison(
    writer: RunWriter, model: CnfModel, target: Dataset2D, config: CnfConfig, cfg: SolveConfig
) -> list[tuple[str, int, float]]:
    rows = width_sweep(config, target, cfg, model)

    if config.nf_layers and config.task != "density":
        logger.warning("Planar flow baseline only supports task=density; skipping")
    elif config.nf_layers:
        for layers in config.nf_layers:
            init_rng, train_rng, eval_rng = RngState(config.seed).spawn(3)
            flow = PlanarFlow.init(target.dim, layers, init_rng)
            flow, _ = train_planar_nf(
                flow, target, config.nf_iters, train_rng, batch_size=config.batch_size
            )
            z0 = gaussian_sample(eval_rng, (EVALUATION_SAMPLES, target.dim))
            rows.append(("nf", layers, planar_kl_loss_and_grad(flow, target, z0).value))

    if rows:
        writer.write_table("nf_comparison.csv", COMPARISON_HEADER, rows)
        series = []
        for name in ("cnf", "nf"):
            sizes = [row[1] for row in rows if row[0] == name]
            if sizes:
                losses = [row[2] for row in rows if row[0] == name]
                series.append(Series(np.array(sizes), np.array(losses), label=name))
        writer.write_svg(
            "nf_comparison.svg",
            emit_svg(
                series,
                "line",
                title="Final loss vs size",
                xlabel="M (CNF units) / K (flow layers)",
                ylabel="loss",
                logx=True,
            ),
        )
    return rows


def run_cnf(config: CnfConfig, writer: RunWriter) -> CnfTrainingResult:
    """Train the flow and write its curves, density grid, samples and comparison table.

    Raises:
        ArgumentError: For an unknown dataset or a density task without an exact target
        CheckFailure: If sampling and density evaluation disagree beyond 1e-4
    """
    target = _target(config)
    cfg = config.solve_config()

    def log_iteration(record: TrainingRecord) -> None:
        writer.log_metrics(
            record.iter,
            loss=record.loss,
            nfe_f=record.nfe_forward,
            nfe_b=record.nfe_backward,
        )

    result = _train(config, target, config.units, cfg, on_iteration=log_iteration)
    model = result.model
    writer.write_table("training_log.csv", TRAINING_LOG_HEADER, (r.as_row() for r in result.log))
    if result.log:
        writer.write_svg(
            "loss.svg",
            emit_svg(
                Series(np.arange(len(result.log)), np.array(result.losses)),
                "line",
                title=f"CNF {config.task} loss (M={config.units})",
                xlabel="iteration",
                ylabel="loss",
            ),
        )

    if target.dim == 2:
        _density_outputs(writer, model, config, cfg)
    _sample_outputs(writer, model, target, config, cfg)
    _comparison(writer, model, target, config, cfg)
    return result
