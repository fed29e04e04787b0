"""Run directory writer: metrics CSV, tables, plots and checkpoints, all written atomically."""

import hashlib
import json
import logging
import time
from collections.abc import Iterable, Sequence
from pathlib import Path

from pydantic import BaseModel

from odegrad.core.io import atomic_write_bytes, render_csv

logger = logging.getLogger(__name__)

# Constants
METRICS_FILE = "metrics.csv"
MANIFEST_FILE = "manifest.json"
METRICS_HEADER = ("experiment", "iter", "loss", "nfe_f", "nfe_b", "rmse", "elapsed_ms")
HASH_DISPLAY_LENGTH = 16  # Number of hex characters to show in log messages


class MetricsRow(BaseModel):
    """One line of the shared metrics schema; metrics an experiment lacks stay empty."""

    experiment: str
    iter: int
    loss: float | None = None
    nfe_f: int | None = None
    nfe_b: int | None = None
    rmse: float | None = None
    elapsed_ms: float | None = None

    def as_row(self) -> tuple:
        return tuple(getattr(self, name) for name in METRICS_HEADER)


class RunWriter:
    """Writer for one experiment run's output directory.

    Every artifact is recorded in a manifest with its SHA-256 so two runs can be
    compared file by file.
    """

    def __init__(self, output_dir: Path, experiment: str, record_timing: bool = False) -> None:
        """Initialize run writer.

        Args:
            output_dir: Directory for this run's artifacts (created if missing)
            experiment: Experiment name written into every metrics row
            record_timing: Fill elapsed_ms (makes metrics differ between runs)
        """
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        self.experiment = experiment
        self.record_timing = record_timing
        self.metrics: list[MetricsRow] = []
        self.artifacts: dict[str, str] = {}
        self._started = time.perf_counter()

    def _write(self, name: str, data: bytes) -> Path:
        path = atomic_write_bytes(self.output_dir / name, data)
        digest = hashlib.sha256(data).hexdigest()
        self.artifacts[name] = digest
        logger.verbose(f"Wrote {path} (sha256 {digest[:HASH_DISPLAY_LENGTH]}...)")
        return path

    def log_metrics(
        self,
        iteration: int,
        loss: float | None = None,
        nfe_f: int | None = None,
        nfe_b: int | None = None,
        rmse: float | None = None,
    ) -> MetricsRow:
        """Append a metrics row (kept in memory until ``flush_metrics``)."""
        elapsed = None
        if self.record_timing:
            elapsed = 1000.0 * (time.perf_counter() - self._started)
        row = MetricsRow(
            experiment=self.experiment,
            iter=iteration,
            loss=loss,
            nfe_f=nfe_f,
            nfe_b=nfe_b,
            rmse=rmse,
            elapsed_ms=elapsed,
        )
        self.metrics.append(row)
        return row

    def flush_metrics(self) -> Path:
        """Write every metrics row logged so far."""
        text = render_csv(METRICS_HEADER, (row.as_row() for row in self.metrics))
        return self._write(METRICS_FILE, text.encode("utf-8"))

    def write_table(
        self, name: str, header: Sequence[str], rows: Iterable[Sequence[object]]
    ) -> Path:
        """Write an auxiliary CSV table.

        Args:
            name: File name relative to the run directory (e.g. "gradcheck.csv")
            header: Column names
            rows: Row values; floats get 17 significant digits, None becomes empty

        Returns:
            Path to written file
        """
        return self._write(name, render_csv(header, rows).encode("utf-8"))

    def write_svg(self, name: str, svg: bytes) -> Path:
        return self._write(name, svg)

    def write_binary(self, name: str, content: bytes) -> Path:
        """Write a binary artifact such as a model checkpoint."""
        return self._write(name, content)

    def write_config(self, config: BaseModel) -> Path:
        """Write the resolved configuration as JSON."""
        text = json.dumps(config.model_dump(mode="json"), indent=2, sort_keys=True)
        return self._write("config.json", text.encode("utf-8"))

    def write_manifest(self) -> Path:
        """Write the artifact manifest (name -> sha256), excluding itself."""
        data = json.dumps(dict(sorted(self.artifacts.items())), indent=2).encode("utf-8")
        path = atomic_write_bytes(self.output_dir / MANIFEST_FILE, data)
        logger.debug(f"Wrote manifest: {path}")
        return path

    def close(self) -> None:
        """Flush metrics and write the manifest."""
        self.flush_metrics()
        self.write_manifest()
