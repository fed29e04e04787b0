"""Concentric-rings classification with an ODE block, trained by the adjoint or through RK4."""

import logging
from dataclasses import dataclass, replace
from typing import Literal

import numpy as np
from scipy.special import log_softmax, softmax

from odegrad.adjoint.direct import rk4_backward, rk4_forward
from odegrad.adjoint.gradients import backward_gradients
from odegrad.adjoint.nfe import NfeReport, nfe_report
from odegrad.core.exceptions import ArgumentError, DimensionError, TrainingDivergenceError
from odegrad.core.optim import init_optimizer, optimizer_step
from odegrad.core.rng import RngState
from odegrad.core.tensor import Tensor, as_tensor
from odegrad.dynamics.architectures import MlpDynamics
from odegrad.dynamics.layers import Mlp
from odegrad.experiments.config import Odenet2dConfig
from odegrad.experiments.plots import Series, emit_svg
from odegrad.experiments.writer import RunWriter
from odegrad.solvers.config import SolveConfig
from odegrad.solvers.integrate import solve

logger = logging.getLogger(__name__)

# Constants
INNER_RADIUS = (0.0, 1.0)
OUTER_RADIUS = (1.5, 2.5)
BLOCK_T0 = 0.0
BLOCK_T1 = 1.0
N_CLASSES = 2
SWEEP_HEADER = ("rtol", "nfe_f", "error")

Block = Literal["odenet", "rknet"]


def make_rings(rng: RngState, n: int) -> tuple[Tensor, Tensor]:
    """Two concentric classes separable by radius; labels alternate 0, 1, 0, ...

    Returns:
        Tuple of (points[n, 2], labels[n])
    """
    if n < 1:
        raise ArgumentError(f"make_rings: n must be >= 1, got {n}")
    labels = np.arange(n) % N_CLASSES
    inner = rng.uniform(*INNER_RADIUS, n)
    outer = rng.uniform(*OUTER_RADIUS, n)
    radius = np.where(labels == 0, inner, outer)
    angle = rng.uniform(0.0, 2.0 * np.pi, n)
    points = np.stack([radius * np.cos(angle), radius * np.sin(angle)], axis=1)
    return points, labels


@dataclass(frozen=True)
class StepResult:
    loss: float
    grad: Tensor
    nfe: NfeReport


@dataclass(frozen=True)
class RingsClassifier:
    """Lift (affine + tanh) -> ODE block on [0, 1] -> linear head, one parameter vector."""

    theta: Tensor
    hidden_dim: int = 6
    dyn_hidden: int = 16

    def __post_init__(self) -> None:
        theta = np.array(self.theta, dtype=np.float64).ravel()
        if theta.shape != (self.param_count,):
            raise DimensionError("rings classifier parameters", (self.param_count,), theta.shape)
        theta.flags.writeable = False
        object.__setattr__(self, "theta", theta)

    @property
    def lift(self) -> Mlp:
        return Mlp((2, self.hidden_dim), output_activation="tanh")

    @property
    def head(self) -> Mlp:
        return Mlp((self.hidden_dim, N_CLASSES))

    def _sizes(self) -> tuple[int, int, int]:
        block = Mlp((self.hidden_dim + 1, self.dyn_hidden, self.hidden_dim))
        return self.lift.param_count, block.param_count, self.head.param_count

    @property
    def param_count(self) -> int:
        return sum(self._sizes())

    def _split(self) -> tuple[Tensor, Tensor, Tensor]:
        n_lift, n_block, _ = self._sizes()
        return np.split(self.theta, [n_lift, n_lift + n_block])

    @property
    def block(self) -> MlpDynamics:
        return MlpDynamics(self.hidden_dim, self._split()[1], hidden=(self.dyn_hidden,))

    @classmethod
    def init(cls, rng: RngState, hidden_dim: int = 6, dyn_hidden: int = 16) -> "RingsClassifier":
        parts = [
            Mlp((2, hidden_dim)).init_theta(rng),
            Mlp((hidden_dim + 1, dyn_hidden, hidden_dim)).init_theta(rng),
            Mlp((hidden_dim, N_CLASSES)).init_theta(rng),
        ]
        return cls(np.concatenate(parts), hidden_dim, dyn_hidden)

    def with_theta(self, theta: Tensor) -> "RingsClassifier":
        return replace(self, theta=theta)

    def features(self, x: Tensor, cfg: SolveConfig) -> tuple[Tensor, int]:
        """ODE block output for a batch of inputs, with the forward evaluation count."""
        lift_theta, _, _ = self._split()
        h0 = self.lift(lift_theta, as_tensor(x))
        trajectory = solve(self.block, h0, BLOCK_T0, BLOCK_T1, cfg)
        return trajectory.final, trajectory.nfe

    def logits(self, x: Tensor, cfg: SolveConfig) -> Tensor:
        h1, _ = self.features(x, cfg)
        return self.head(self._split()[2], h1)

    def accuracy(self, x: Tensor, labels: Tensor, cfg: SolveConfig) -> float:
        return float(np.mean(np.argmax(self.logits(x, cfg), axis=1) == labels))

    def loss_and_grad(
        self, x: Tensor, labels: Tensor, cfg: SolveConfig, block: Block, rk_step: float
    ) -> StepResult:
        """Mean cross-entropy and its gradient.

        odenet differentiates the block with the adjoint (constant memory); rknet
        backpropagates through fixed-step RK4 with step rk_step.
        """
        lift_theta, _, head_theta = self._split()
        f = self.block
        h0, lift_cache = self.lift.forward(lift_theta, as_tensor(x))
        if block == "odenet":
            forward = solve(f, h0, BLOCK_T0, BLOCK_T1, cfg)
            h1, nfe_f = forward.final, forward.nfe
        else:
            tape = rk4_forward(f, h0, BLOCK_T0, BLOCK_T1, rk_step)
            h1, nfe_f = tape.final, tape.nfe

        logits, head_cache = self.head.forward(head_theta, h1)
        n = len(labels)
        log_probs = log_softmax(logits, axis=1)
        loss = -float(np.mean(log_probs[np.arange(n), labels]))
        grad_logits = softmax(logits, axis=1)
        grad_logits[np.arange(n), labels] -= 1.0
        grad_logits /= n

        grad_h1, grad_head = self.head.backward(head_theta, head_cache, grad_logits)
        if block == "odenet":
            bundle = backward_gradients(f, h1, BLOCK_T0, BLOCK_T1, grad_h1, cfg, z0=h0)
        else:
            bundle = rk4_backward(f, tape, grad_h1)
        _, grad_lift = self.lift.backward(lift_theta, lift_cache, bundle.d_z0)
        grad = np.concatenate([grad_lift, bundle.d_theta, grad_head])
        return StepResult(loss, grad, nfe_report(nfe_f, bundle.nfe))


def train_classifier(
    model: RingsClassifier,
    x: Tensor,
    labels: Tensor,
    config: Odenet2dConfig,
    rng: RngState,
    writer: RunWriter | None = None,
) -> tuple[RingsClassifier, list[NfeReport]]:
    """Minibatch Adam on the cross-entropy; one metrics row per iteration.

    Raises:
        TrainingDivergenceError: If the loss or gradient becomes non-finite
    """
    cfg = config.solve_config()
    state = init_optimizer(config.optimizer("adam"), model.theta)
    theta = model.theta
    reports = []
    batch = min(config.batch_size, len(labels))
    for iteration in range(config.iters):
        rows = rng.choice(len(labels), batch)
        step = model.with_theta(theta).loss_and_grad(
            x[rows], labels[rows], cfg, config.block, config.rk_step
        )
        if not np.isfinite(step.loss) or not np.all(np.isfinite(step.grad)):
            raise TrainingDivergenceError(iteration, step.loss)
        state, theta = optimizer_step(state, theta, step.grad)
        reports.append(step.nfe)
        nfe_f, nfe_b = step.nfe.nfe_f, step.nfe.nfe_b
        if writer is not None:
            writer.log_metrics(iteration, loss=step.loss, nfe_f=nfe_f, nfe_b=nfe_b)
        logger.verbose(f"iter {iteration}: loss={step.loss:.6f} nfe_f={nfe_f} nfe_b={nfe_b}")
    return model.with_theta(theta), reports


def tolerance_sweep(
    model: RingsClassifier,
    x: Tensor,
    rtols: list[float],
    reference_rtol: float,
    cfg: SolveConfig,
) -> list[tuple[float, int, float]]:
    """Relative error of the block output and forward NFE at each tolerance.

    The error is max |h(rtol) - h(ref)| / max |h(ref)| against a solve at reference_rtol.
    """
    reference, _ = model.features(x, cfg.with_tolerance(reference_rtol))
    scale = float(np.max(np.abs(reference)))
    rows = []
    for rtol in rtols:
        h1, nfe = model.features(x, cfg.with_tolerance(rtol))
        rows.append((float(rtol), nfe, float(np.max(np.abs(h1 - reference))) / scale))
    errors = [row[2] for row in sorted(rows, reverse=True)]
    if any(later > earlier for earlier, later in zip(errors, errors[1:])):
        logger.warning(f"Solution error is not monotone in rtol: {errors}")
    return rows


def _training_plots(writer: RunWriter, reports: list[NfeReport]) -> None:
    iters = np.arange(len(reports))
    nfe_f = np.array([r.nfe_f for r in reports], dtype=float)
    nfe_b = np.array([r.nfe_b for r in reports], dtype=float)
    writer.write_svg(
        "nfe_forward_vs_backward.svg",
        emit_svg(
            Series(nfe_f, nfe_b),
            "scatter",
            title="Backward vs forward evaluations",
            xlabel="NFE forward",
            ylabel="NFE backward",
        ),
    )
    writer.write_svg(
        "nfe_training.svg",
        emit_svg(
            Series(iters, nfe_f, label="forward"),
            "line",
            title="Forward evaluations during training",
            xlabel="iteration",
            ylabel="NFE",
        ),
    )


def _sweep_plots(writer: RunWriter, rows: list[tuple[float, int, float]]) -> None:
    rtol = np.array([r[0] for r in rows])
    nfe = np.array([r[1] for r in rows], dtype=float)
    error = np.maximum(np.array([r[2] for r in rows]), np.finfo(float).tiny)
    writer.write_svg(
        "error_vs_rtol.svg",
        emit_svg(
            Series(rtol, error),
            "line",
            title="Solution error vs tolerance",
            xlabel="rtol",
            ylabel="relative error",
            logx=True,
            logy=True,
        ),
    )
    writer.write_svg(
        "nfe_vs_rtol.svg",
        emit_svg(
            Series(rtol, nfe),
            "line",
            title="Forward evaluations vs tolerance",
            xlabel="rtol",
            ylabel="NFE",
            logx=True,
        ),
    )


def run_odenet2d(config: Odenet2dConfig, writer: RunWriter) -> float:
    """Train, sweep tolerances and plot; returns held-out accuracy."""
    train_rng, test_rng, init_rng, batch_rng = RngState(config.seed).spawn(4)
    x_train, y_train = make_rings(train_rng, config.n_train)
    x_test, y_test = make_rings(test_rng, config.n_test)
    model = RingsClassifier.init(init_rng, config.hidden_dim, config.dyn_hidden)
    logger.info(
        f"Training {config.block} classifier ({model.param_count} parameters, "
        f"{config.iters} iterations)"
    )

    model, reports = train_classifier(model, x_train, y_train, config, batch_rng, writer)
    cfg = config.solve_config()
    accuracy = model.accuracy(x_test, y_test, cfg)
    if reports:
        ratios = [r.ratio for r in reports if r.ratio is not None]
        mean_ratio = float(np.mean(ratios)) if ratios else float("nan")
        logger.info(f"Mean backward/forward NFE ratio: {mean_ratio:.3f}")
        _training_plots(writer, reports)

    rows = tolerance_sweep(model, x_test, config.sweep_rtols, config.reference_rtol, cfg)
    writer.write_table("tolerance_sweep.csv", SWEEP_HEADER, rows)
    _sweep_plots(writer, rows)
    writer.write_table("accuracy.csv", ("split", "accuracy"), [("test", accuracy)])
    logger.info(f"✓ Held-out accuracy: {accuracy:.4f}")
    return accuracy
