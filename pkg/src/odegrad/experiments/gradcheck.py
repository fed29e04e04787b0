"""Gradient checks: exact VJPs and adjoint gradients against finite differences and RK4 backprop."""

import logging
from dataclasses import dataclass, field

import numpy as np

from odegrad.adjoint.direct import rk4_backward, rk4_forward
from odegrad.adjoint.gradients import backward_gradients
from odegrad.core.exceptions import CheckFailure
from odegrad.core.rng import RngState, gaussian_sample
from odegrad.core.tensor import Tensor
from odegrad.dynamics.architectures import build_dynamics
from odegrad.dynamics.base import DynamicsFunc
from odegrad.dynamics.checks import central_difference, fd_vjp
from odegrad.experiments.config import GradcheckConfig
from odegrad.experiments.writer import RunWriter
from odegrad.solvers.config import SolveConfig
from odegrad.solvers.integrate import solve, solve_on_grid

logger = logging.getLogger(__name__)

GRADCHECK_HEADER = (
    "check",
    "architecture",
    "config",
    "component",
    "index",
    "adjoint",
    "reference",
    "abs_err",
    "rel_err",
    "passed",
)


@dataclass(frozen=True)
class CheckRow:
    check: str
    architecture: str
    config: int
    component: str
    index: int
    adjoint: float
    reference: float
    abs_err: float
    rel_err: float
    passed: bool

    def as_row(self) -> tuple:
        return tuple(getattr(self, name) for name in GRADCHECK_HEADER)

    def describe(self) -> str:
        return (
            f"{self.architecture}[{self.config}] {self.check} {self.component}[{self.index}]: "
            f"{self.adjoint:.10g} vs {self.reference:.10g} (rel {self.rel_err:.3g})"
        )


@dataclass
class GradcheckReport:
    rows: list[CheckRow] = field(default_factory=list)

    @property
    def failures(self) -> list[CheckRow]:
        return [row for row in self.rows if not row.passed]

    def compare(
        self,
        check: str,
        architecture: str,
        config: int,
        component: str,
        computed: Tensor,
        reference: Tensor,
        rel_tol: float,
        abs_floor: float,
        indices: Tensor | None = None,
    ) -> None:
        """Add one row per compared entry; passes if |err| <= rel_tol |ref| + abs_floor."""
        computed, reference = np.ravel(computed), np.ravel(reference)
        for i in range(computed.size) if indices is None else indices:
            a, r = float(computed[i]), float(reference[i])
            err = abs(a - r)
            self.rows.append(
                CheckRow(
                    check,
                    architecture,
                    config,
                    component,
                    int(i),
                    a,
                    r,
                    err,
                    err / max(abs(r), abs_floor, np.finfo(float).tiny),
                    err <= rel_tol * abs(r) + abs_floor,
                )
            )


def _loss(weights: Tensor, z1: Tensor) -> tuple[float, Tensor]:
    """L = w . z1 + |z1|^2 / 2 and its gradient."""
    return float(weights @ z1 + 0.5 * z1 @ z1), weights + z1


def _check_vjp(
    report: GradcheckReport,
    f: DynamicsFunc,
    name: str,
    index: int,
    rng: RngState,
    config: GradcheckConfig,
) -> None:
    z = gaussian_sample(rng, f.dim)
    a = gaussian_sample(rng, f.dim)
    t = float(rng.uniform(config.t0, config.t1, 1)[0])
    exact = f.vjp(z, t, a)
    approx = fd_vjp(f, z, t, a, config.fd_eps)
    tol, floor = config.rel_tol, config.abs_floor
    report.compare("vjp_fd", name, index, "vjp_z", exact.vjp_z, approx.vjp_z, tol, floor)
    report.compare(
        "vjp_fd", name, index, "vjp_theta", exact.vjp_theta, approx.vjp_theta, tol, floor
    )
    report.compare("vjp_fd", name, index, "vjp_t", [exact.vjp_t], [approx.vjp_t], tol, floor)


def _check_adjoint(
    report: GradcheckReport,
    f: DynamicsFunc,
    name: str,
    index: int,
    rng: RngState,
    config: GradcheckConfig,
    cfg: SolveConfig,
) -> tuple[float, int, int]:
    z0 = gaussian_sample(rng, f.dim)
    weights = gaussian_sample(rng, f.dim)
    t0, t1 = config.t0, config.t1
    forward = solve(f, z0, t0, t1, cfg.model_copy(update={"record_steps": True}))
    loss, seed = _loss(weights, forward.final)
    bundle = backward_gradients(f, forward.final, t0, t1, seed, cfg, z0=z0)

    # Finite differences replay the accepted step grid, rescaled when t0 or t1 move
    grid = forward.times

    def loss_at(ff: DynamicsFunc, zz: Tensor, a: float, b: float) -> float:
        moved = a + (grid - t0) * (b - a) / (t1 - t0)
        return _loss(weights, solve_on_grid(ff, zz, moved, cfg.method).final)[0]

    eps, tol, floor = config.fd_eps, config.rel_tol, config.abs_floor
    fd_z0 = central_difference(lambda zz: loss_at(f, zz, t0, t1), z0, eps)
    k = min(config.fd_param_samples, f.param_count)
    sampled = np.sort(rng.choice(f.param_count, k))
    fd_theta = central_difference(
        lambda th: loss_at(f.with_theta(th), z0, t0, t1), f.theta, eps, indices=sampled
    )
    fd_t0 = central_difference(lambda tt: loss_at(f, z0, float(tt[0]), t1), [t0], eps)
    fd_t1 = central_difference(lambda tt: loss_at(f, z0, t0, float(tt[0])), [t1], eps)

    report.compare("adjoint_fd", name, index, "d_z0", bundle.d_z0, fd_z0, tol, floor)
    report.compare(
        "adjoint_fd", name, index, "d_theta", bundle.d_theta, fd_theta, tol, floor, sampled
    )
    report.compare("adjoint_fd", name, index, "d_t0", [bundle.d_t0], fd_t0, tol, floor)
    report.compare("adjoint_fd", name, index, "d_t1", [bundle.d_t1], fd_t1, tol, floor)

    if name == "mlp":
        _check_direct(report, f, name, index, z0, weights, bundle, config)
    return loss, forward.nfe, bundle.nfe


def _check_direct(
    report: GradcheckReport,
    f: DynamicsFunc,
    name: str,
    index: int,
    z0: Tensor,
    weights: Tensor,
    bundle,
    config: GradcheckConfig,
) -> None:
    """Continuous adjoint against backpropagation through fine fixed-step RK4."""
    h = (config.t1 - config.t0) / 2**config.direct_steps_log2
    tape = rk4_forward(f, z0, config.t0, config.t1, h)
    _, seed = _loss(weights, tape.final)
    direct = rk4_backward(f, tape, seed)
    tol = config.direct_rel_tol
    for component, ours, theirs in (
        ("d_z0", bundle.d_z0, direct.d_z0),
        ("d_theta", bundle.d_theta, direct.d_theta),
    ):
        floor = config.abs_floor + tol * 1e-2 * float(np.max(np.abs(theirs)))
        report.compare("adjoint_direct", name, index, component, ours, theirs, tol, floor)


def run_gradcheck(config: GradcheckConfig, writer: RunWriter) -> GradcheckReport:
    """Run every check, write gradcheck.csv and the metrics rows.

    Raises:
        CheckFailure: If any compared entry is out of tolerance (after writing the report)
    """
    cfg = config.solve_config()
    report = GradcheckReport()
    streams = RngState(config.seed).spawn(len(config.architectures))
    iteration = 0
    for name, rng in zip(config.architectures, streams):
        logger.info(f"Checking {name} ({config.configs_per_architecture} configurations)")
        for index in range(config.configs_per_architecture):
            f = build_dynamics(name, config.dim, rng, hidden=config.hidden, units=config.units)
            _check_vjp(report, f, name, index, rng, config)
            loss, nfe_f, nfe_b = _check_adjoint(report, f, name, index, rng, config, cfg)
            writer.log_metrics(iteration, loss=loss, nfe_f=nfe_f, nfe_b=nfe_b)
            iteration += 1

    writer.write_table("gradcheck.csv", GRADCHECK_HEADER, (row.as_row() for row in report.rows))
    failures = report.failures
    if failures:
        for row in failures:
            logger.error(f"✗ {row.describe()}")
        raise CheckFailure([row.describe() for row in failures])
    logger.info(f"✓ gradcheck passed ({len(report.rows)} comparisons)")
    return report
