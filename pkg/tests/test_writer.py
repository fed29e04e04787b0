"""Tests for the run directory writer."""

import csv
import hashlib
import json
from pathlib import Path

import pytest

from odegrad.experiments.config import PoissonConfig
from odegrad.experiments.writer import METRICS_HEADER, MetricsRow, RunWriter


def read_rows(path: Path) -> list[list[str]]:
    with path.open(newline="") as f:
        return list(csv.reader(f))


def test_writer_init(tmp_path: Path) -> None:
    """Test the run directory is created on construction."""
    output_dir = tmp_path / "runs" / "gradcheck"
    writer = RunWriter(output_dir, "gradcheck")
    assert writer.output_dir == output_dir
    assert output_dir.is_dir()
    assert writer.metrics == []


def test_metrics_header_and_empty_cells(tmp_path: Path) -> None:
    """Test metrics.csv has the shared header and leaves missing metrics empty."""
    writer = RunWriter(tmp_path, "poisson")
    writer.log_metrics(0, loss=1.5, nfe_f=26, nfe_b=38)
    writer.log_metrics(1, loss=0.25)
    path = writer.flush_metrics()

    rows = read_rows(path)
    assert tuple(rows[0]) == METRICS_HEADER
    assert rows[1] == ["poisson", "0", "1.5", "26", "38", "", ""]
    assert rows[2] == ["poisson", "1", "0.25", "", "", "", ""]


def test_metrics_floats_round_trip(tmp_path: Path) -> None:
    """Test floats are written with enough digits to be read back exactly."""
    writer = RunWriter(tmp_path, "cnf")
    value = 1.0 / 3.0
    writer.log_metrics(0, loss=value)
    rows = read_rows(writer.flush_metrics())
    assert float(rows[1][2]) == value


def test_record_timing(tmp_path: Path) -> None:
    """Test elapsed_ms is filled only when timing is recorded."""
    untimed = RunWriter(tmp_path / "a", "cnf")
    timed = RunWriter(tmp_path / "b", "cnf", record_timing=True)
    assert untimed.log_metrics(0, loss=1.0).elapsed_ms is None
    elapsed = timed.log_metrics(0, loss=1.0).elapsed_ms
    assert elapsed is not None and elapsed >= 0.0


def test_metrics_row_order() -> None:
    """Test MetricsRow.as_row follows the header order."""
    row = MetricsRow(experiment="spirals", iter=3, loss=0.5, rmse=0.1)
    assert row.as_row() == ("spirals", 3, 0.5, None, None, 0.1, None)


def test_write_table(tmp_path: Path) -> None:
    """Test auxiliary tables render booleans and None."""
    writer = RunWriter(tmp_path, "gradcheck")
    path = writer.write_table("table.csv", ("name", "ok", "value"), [("a", True, None)])
    assert path == tmp_path / "table.csv"
    assert path.read_text() == "name,ok,value\na,true,\n"


def test_manifest_hashes(tmp_path: Path) -> None:
    """Test the manifest lists every artifact with its SHA-256 and excludes itself."""
    writer = RunWriter(tmp_path, "spirals")
    writer.write_binary("model.bin", b"\x00\x01\x02")
    writer.write_svg("plot.svg", b"<svg/>")
    writer.log_metrics(0, loss=1.0)
    writer.close()

    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert set(manifest) == {"metrics.csv", "model.bin", "plot.svg"}
    for name, digest in manifest.items():
        assert digest == hashlib.sha256((tmp_path / name).read_bytes()).hexdigest()


def test_write_config(tmp_path: Path) -> None:
    """Test the resolved configuration is written as sorted JSON."""
    writer = RunWriter(tmp_path, "poisson")
    config = PoissonConfig(seed=7, iters=3)
    path = writer.write_config(config)

    data = json.loads(path.read_text())
    assert data["seed"] == 7
    assert data["iters"] == 3
    assert data["experiment"] == "poisson"
    assert data["output"] is None
    assert "config.json" in writer.artifacts


def test_rewrite_replaces_file(tmp_path: Path) -> None:
    """Test rewriting an artifact replaces its content and its hash."""
    writer = RunWriter(tmp_path, "cnf")
    writer.write_binary("model.bin", b"first")
    first = writer.artifacts["model.bin"]
    writer.write_binary("model.bin", b"second")
    assert (tmp_path / "model.bin").read_bytes() == b"second"
    assert writer.artifacts["model.bin"] != first
    assert not list(tmp_path.glob("*.tmp"))


@pytest.mark.parametrize("name", ["nested/table.csv", "deeper/still/table.csv"])
def test_write_table_creates_parents(tmp_path: Path, name: str) -> None:
    """Test tables may live in subdirectories of the run directory."""
    writer = RunWriter(tmp_path, "odenet2d")
    path = writer.write_table(name, ("x",), [(1,)])
    assert path.exists()
    assert name in writer.artifacts


def test_failed_write_removes_temporary_file(tmp_path: Path, mocker) -> None:
    """Test a failed rename leaves neither the target nor a temporary file behind."""
    mocker.patch("pathlib.Path.replace", side_effect=OSError("disk full"))
    writer = RunWriter(tmp_path, "cnf")
    with pytest.raises(OSError, match="disk full"):
        writer.write_binary("model.bin", b"payload")
    assert not (tmp_path / "model.bin").exists()
    assert not list(tmp_path.glob("*.tmp"))
    assert "model.bin" not in writer.artifacts
