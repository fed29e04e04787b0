"""Tests for experiment building blocks."""

import numpy as np
import pytest

from odegrad.cnf.datasets import get_dataset
from odegrad.core.exceptions import ArgumentError
from odegrad.core.rng import RngState
from odegrad.dynamics.checks import central_difference
from odegrad.experiments.cnf import width_sweep
from odegrad.experiments.config import CnfConfig, Odenet2dConfig, PoissonConfig
from odegrad.experiments.gradcheck import GradcheckReport
from odegrad.experiments.odenet2d import (
    INNER_RADIUS,
    OUTER_RADIUS,
    RingsClassifier,
    make_rings,
    tolerance_sweep,
    train_classifier,
)
from odegrad.experiments.poisson import make_events, true_rate
from odegrad.solvers.config import SolveConfig

FIXED = SolveConfig(method="rk4", step_size=0.01, adaptive=False)
RK_STEP = 0.05


def test_make_rings() -> None:
    """Test labels alternate and radii fall in each class's annulus."""
    points, labels = make_rings(RngState(0), 50)
    assert points.shape == (50, 2)
    assert list(labels[:4]) == [0, 1, 0, 1]
    radius = np.linalg.norm(points, axis=1)
    assert np.all(radius[labels == 0] <= INNER_RADIUS[1])
    assert np.all(radius[labels == 1] >= OUTER_RADIUS[0])


def test_make_rings_needs_points() -> None:
    """Test an empty ring set is rejected."""
    with pytest.raises(ArgumentError):
        make_rings(RngState(0), 0)


@pytest.mark.parametrize("block", ["odenet", "rknet"])
def test_classifier_gradient(block: str) -> None:
    """Test the classifier gradient against finite differences on a few parameters."""
    rng = RngState(1)
    model = RingsClassifier.init(rng, hidden_dim=3, dyn_hidden=4)
    x, labels = make_rings(rng, 6)
    step = model.loss_and_grad(x, labels, FIXED, block, RK_STEP)

    indices = np.array([0, model.param_count // 2, model.param_count - 1])

    def loss(theta):
        return model.with_theta(theta).loss_and_grad(x, labels, FIXED, block, RK_STEP).loss

    approx = central_difference(loss, model.theta, 1e-6, indices=indices)
    np.testing.assert_allclose(step.grad[indices], approx[indices], rtol=1e-4, atol=1e-8)
    assert step.nfe.nfe_f == (400 if block == "odenet" else 80)


def test_training_runs() -> None:
    """Test a few Adam iterations keep the loss finite and report NFE per step."""
    config = Odenet2dConfig(iters=3, batch_size=8, hidden_dim=3, dyn_hidden=4)
    rng = RngState(2)
    model = RingsClassifier.init(rng, 3, 4)
    x, labels = make_rings(rng, 16)
    trained, reports = train_classifier(model, x, labels, config, rng)
    assert len(reports) == 3
    assert not np.array_equal(trained.theta, model.theta)
    assert all(r.nfe_f > 0 and r.nfe_b > 0 for r in reports)


def test_tolerance_sweep() -> None:
    """Test tighter tolerances cost more evaluations and give smaller errors."""
    rng = RngState(3)
    model = RingsClassifier.init(rng, 3, 4)
    x, _ = make_rings(rng, 10)
    rows = tolerance_sweep(model, x, [1e-2, 1e-6], 1e-12, SolveConfig())
    (loose_rtol, loose_nfe, loose_err), (tight_rtol, tight_nfe, tight_err) = rows
    assert (loose_rtol, tight_rtol) == (1e-2, 1e-6)
    assert tight_nfe >= loose_nfe
    assert tight_err <= loose_err


def test_report_compare() -> None:
    """Test rows pass inside rel_tol |ref| + abs_floor and fail outside."""
    report = GradcheckReport()
    report.compare("vjp_fd", "mlp", 0, "vjp_z", [1.0, 2.0], [1.00001, 2.1], 1e-4, 1e-7)
    assert [row.passed for row in report.rows] == [True, False]
    assert report.failures[0].index == 1
    assert report.rows[1].rel_err == pytest.approx(0.1 / 2.1)
    assert "vjp_z[1]" in report.failures[0].describe()


def test_report_compare_sampled_indices() -> None:
    """Test only the sampled entries are compared."""
    report = GradcheckReport()
    values = np.arange(5.0)
    sampled = np.array([1, 3])
    report.compare("adjoint_fd", "planar", 1, "d_theta", values, values, 1e-4, 0.0, sampled)
    assert [row.index for row in report.rows] == [1, 3]


@pytest.mark.parametrize("process", ["homogeneous", "sinusoidal", "empty"])
def test_poisson_processes(process: str) -> None:
    """Test generated events lie in the window and the reference rate matches the process."""
    config = PoissonConfig(process=process, rate=4.0, amplitude=2.0, period=5.0, duration=10.0)
    events = make_events(config, RngState(4))
    assert np.all((events >= 0.0) & (events <= config.duration))
    assert np.all(np.diff(events) >= 0.0)
    times = np.array([0.0, 1.25, 2.5])
    rate = true_rate(config, times)
    if process == "homogeneous":
        np.testing.assert_allclose(rate, 4.0)
    elif process == "sinusoidal":
        np.testing.assert_allclose(rate, [4.0, 6.0, 4.0], atol=1e-12)
    else:
        assert len(events) == 0
        np.testing.assert_allclose(rate, 0.0)


@pytest.mark.slow
def test_width_sweep_loss_non_increasing() -> None:
    """Test wider CNFs reach a final density matching loss no worse than narrower ones."""
    config = CnfConfig(
        task="density", dataset="gaussian_mixture", sweep_units=[2, 8, 32], iters=1000, seed=0
    )
    target = get_dataset(config.dataset)
    rows = width_sweep(config, target, config.solve_config())

    assert [(name, units) for name, units, _ in rows] == [("cnf", 2), ("cnf", 8), ("cnf", 32)]
    losses = [loss for _, _, loss in rows]
    assert all(np.isfinite(losses))
    assert losses[0] >= losses[1] >= losses[2]
