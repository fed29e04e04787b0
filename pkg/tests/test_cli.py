"""Tests for the experiment command line."""

import csv
import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from odegrad.cli import main
from tests.fixtures.dynamics import ARCHITECTURES, corrupted_build_dynamics

GRADCHECK_ARGS = [
    "--architectures",
    "linear,planar",
    "--configs-per-architecture",
    "1",
    "--fd-param-samples",
    "3",
]
POISSON_ARGS = [
    "--process",
    "homogeneous",
    "--rate",
    "2",
    "--duration",
    "2",
    "--iters",
    "3",
    "--rate-hidden",
    "4",
    "--dyn-hidden",
    "4",
    "--curve-points",
    "5",
]


def read_rows(path: Path) -> list[dict[str, str]]:
    with path.open(newline="") as f:
        return list(csv.DictReader(f))


def invoke(args: list[str], monkeypatch: pytest.MonkeyPatch | None = None):
    if monkeypatch is not None:
        monkeypatch.delenv("ODEGRAD_SEED", raising=False)
    return CliRunner().invoke(main, args)


def test_help() -> None:
    """Test the group lists every experiment."""
    result = invoke(["--help"])
    assert result.exit_code == 0
    for name in ("gradcheck", "odenet2d", "cnf", "spirals", "poisson"):
        assert name in result.output


def test_gradcheck_passes(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    """Test a small gradient check exits 0 and writes its report."""
    result = invoke(["gradcheck", "-o", str(tmp_path), *GRADCHECK_ARGS], monkeypatch)
    assert result.exit_code == 0, result.output

    rows = read_rows(tmp_path / "gradcheck.csv")
    assert rows
    assert {row["architecture"] for row in rows} == {"linear", "planar"}
    assert all(row["passed"] == "true" for row in rows)
    assert (tmp_path / "metrics.csv").exists()
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert {"config.json", "gradcheck.csv", "metrics.csv"} <= set(manifest)


def test_gradcheck_detects_corrupted_vjp(
    tmp_path: Path, monkeypatch: pytest.MonkeyPatch, mocker
) -> None:
    """Test a wrong parameter VJP makes the check fail with exit code 1."""
    mocker.patch("odegrad.experiments.gradcheck.build_dynamics", corrupted_build_dynamics)
    args = ["gradcheck", "-o", str(tmp_path), "--architectures", "linear"]
    result = invoke([*args, "--configs-per-architecture", "1"], monkeypatch)
    assert result.exit_code == 1

    rows = read_rows(tmp_path / "gradcheck.csv")
    failed = [row for row in rows if row["passed"] == "false"]
    assert any(row["component"] == "vjp_theta" for row in failed)
    assert all(row["component"] != "vjp_z" for row in failed)


def test_unknown_dataset_is_usage_error(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    """Test an unknown CNF dataset exits 2."""
    result = invoke(["cnf", "-o", str(tmp_path), "--dataset", "unknown"], monkeypatch)
    assert result.exit_code == 2


def test_density_task_needs_exact_target(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    """Test density matching against a sample-only dataset exits 2."""
    args = ["cnf", "-o", str(tmp_path), "--task", "density", "--dataset", "two_moons"]
    assert invoke(args, monkeypatch).exit_code == 2


@pytest.mark.parametrize(
    "args",
    [
        ["poisson", "--no-such-setting", "1"],
        ["poisson", "--iters", "-3"],
        ["poisson", "stray"],
        ["spirals", "--n-obs"],
    ],
)
def test_bad_settings_are_usage_errors(
    tmp_path: Path, monkeypatch: pytest.MonkeyPatch, args: list[str]
) -> None:
    """Test invalid settings exit 2 without running."""
    result = invoke([*args, "-o", str(tmp_path / "run")], monkeypatch)
    assert result.exit_code == 2
    assert not (tmp_path / "run").exists()


def test_config_file(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    """Test a config file is read and --seed overrides it."""
    path = tmp_path / "poisson.conf"
    settings = zip(POISSON_ARGS[::2], POISSON_ARGS[1::2])
    lines = [f"{key[2:]} = {value}" for key, value in settings]
    path.write_text("\n".join(["# small run", "seed = 4", *lines]) + "\n")
    out = tmp_path / "run"
    args = ["poisson", "--config", str(path), "--seed", "11", "-o", str(out)]
    result = invoke(args, monkeypatch)
    assert result.exit_code == 0, result.output

    config = json.loads((out / "config.json").read_text())
    assert config["seed"] == 11
    assert config["iters"] == 3
    assert config["process"] == "homogeneous"


def test_poisson_outputs(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    """Test a small Poisson fit writes its tables, plot and one metrics row per iteration."""
    result = invoke(["poisson", "-o", str(tmp_path), *POISSON_ARGS], monkeypatch)
    assert result.exit_code == 0, result.output

    for name in ("events.csv", "rate_curve.csv", "fit.csv", "rate.svg", "manifest.json"):
        assert (tmp_path / name).exists()
    metrics = read_rows(tmp_path / "metrics.csv")
    assert [row["iter"] for row in metrics] == ["0", "1", "2"]
    assert all(row["experiment"] == "poisson" for row in metrics)
    assert all(row["rmse"] == "" and row["elapsed_ms"] == "" for row in metrics)
    assert len(read_rows(tmp_path / "rate_curve.csv")) == 5


def test_same_seed_same_metrics(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    """Test two runs with one seed write byte-identical metrics."""
    first, second = tmp_path / "a", tmp_path / "b"
    for out in (first, second):
        result = invoke(["poisson", "--seed", "3", "-o", str(out), *POISSON_ARGS], monkeypatch)
        assert result.exit_code == 0, result.output
    assert (first / "metrics.csv").read_bytes() == (second / "metrics.csv").read_bytes()
    assert (first / "events.csv").read_bytes() == (second / "events.csv").read_bytes()


def test_seed_from_environment(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    """Test ODEGRAD_SEED sets the seed when --seed is absent."""
    monkeypatch.setenv("ODEGRAD_SEED", "21")
    result = CliRunner().invoke(main, ["poisson", "-o", str(tmp_path), *POISSON_ARGS])
    assert result.exit_code == 0, result.output
    assert json.loads((tmp_path / "config.json").read_text())["seed"] == 21


@pytest.mark.slow
def test_gradcheck_defaults_pass(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    """Test the default check covers 20 configurations of every architecture and all pass."""
    result = invoke(["gradcheck", "-o", str(tmp_path)], monkeypatch)
    assert result.exit_code == 0, result.output

    rows = read_rows(tmp_path / "gradcheck.csv")
    assert all(row["passed"] == "true" for row in rows)
    adjoint_rows = [row for row in rows if row["check"] == "adjoint_fd"]
    covered = {(row["architecture"], row["config"], row["component"]) for row in adjoint_rows}
    for name in ARCHITECTURES:
        for index in range(20):
            for component in ("d_z0", "d_theta", "d_t0", "d_t1"):
                assert (name, str(index), component) in covered
    assert {row["architecture"] for row in rows} == set(ARCHITECTURES)


@pytest.mark.slow
def test_cnf_small_run(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    """Test a short maximum-likelihood CNF run writes its artifacts."""
    args = [
        "cnf",
        "-o",
        str(tmp_path),
        "--task",
        "mle",
        "--dataset",
        "two_circles",
        "--units",
        "2",
        "--iters",
        "2",
        "--batch-size",
        "16",
        "--n-samples",
        "32",
        "--grid-resolution",
        "6",
        "--snapshot-times",
        "0.5,1.0",
        "--sweep-units",
        "1,2",
    ]
    result = invoke(args, monkeypatch)
    assert result.exit_code == 0, result.output
    for name in ("training_log.csv", "density_grid.csv", "samples.csv", "snapshots.csv"):
        assert (tmp_path / name).exists()
    assert len(read_rows(tmp_path / "nf_comparison.csv")) == 2


@pytest.mark.slow
def test_odenet2d_small_run(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    """Test a short ODE-block classifier run with its tolerance sweep."""
    args = [
        "odenet2d",
        "-o",
        str(tmp_path),
        "--n-train",
        "40",
        "--n-test",
        "40",
        "--iters",
        "3",
        "--batch-size",
        "20",
        "--sweep-rtols",
        "1e-2,1e-4",
        "--reference-rtol",
        "1e-10",
    ]
    result = invoke(args, monkeypatch)
    assert result.exit_code == 0, result.output
    assert len(read_rows(tmp_path / "tolerance_sweep.csv")) == 2
    assert float(read_rows(tmp_path / "accuracy.csv")[0]["accuracy"]) <= 1.0


@pytest.mark.slow
def test_spirals_small_run(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    """Test a short spiral comparison writes the RMSE table and a checkpoint."""
    args = [
        "spirals",
        "-o",
        str(tmp_path),
        "--n-traj",
        "4",
        "--n-test",
        "4",
        "--n-time",
        "20",
        "--n-obs",
        "6",
        "--epochs",
        "1",
        "--rnn-epochs",
        "1",
        "--batch-size",
        "4",
        "--latent-dim",
        "2",
        "--rnn-hidden",
        "4",
        "--dyn-hidden",
        "4",
        "--dec-hidden",
        "4",
    ]
    result = invoke(args, monkeypatch)
    assert result.exit_code == 0, result.output
    rows = read_rows(tmp_path / "rmse.csv")
    assert [row["n_obs"] for row in rows] == ["6"]
    assert (tmp_path / "latent_ode.bin").exists()
