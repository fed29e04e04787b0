"""Atomic file writing and CSV formatting shared by every writer."""

import csv
import io
import logging
from collections.abc import Iterable, Sequence
from pathlib import Path
from tempfile import NamedTemporaryFile

logger = logging.getLogger(__name__)

FLOAT_FORMAT = ".17g"


def format_value(value: object) -> str:
    """Render a CSV cell: floats with 17 significant digits, None as empty."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return format(value, FLOAT_FORMAT)
    if hasattr(value, "dtype") and getattr(value, "ndim", 1) == 0:
        return format_value(value.item())
    return str(value)


def atomic_write_bytes(path: Path, data: bytes) -> Path:
    """Write data to path through a temporary file in the same directory.

    Returns:
        Path to written file
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    temp_path = None
    try:
        with NamedTemporaryFile(mode="wb", dir=path.parent, delete=False, suffix=".tmp") as f:
            temp_path = Path(f.name)
            f.write(data)

        # Atomic write
        temp_path.replace(path)
        logger.debug(f"Wrote {path} ({len(data)} bytes)")
    except (IOError, OSError) as e:
        logger.error(f"Failed to write {path}: {e}")
        if temp_path is not None:
            temp_path.unlink(missing_ok=True)
        raise
    return path


def render_csv(header: Sequence[str], rows: Iterable[Sequence[object]]) -> str:
    """CSV text with a header line and formatted cells, '\\n' line endings."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(v) for v in row])
    return buffer.getvalue()


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[object]]) -> Path:
    return atomic_write_bytes(path, render_csv(header, rows).encode("utf-8"))
