"""Tests for SVG plot output."""

from pathlib import Path

import numpy as np
import pytest

from odegrad.core.exceptions import ArgumentError
from odegrad.experiments.plots import Series, emit_svg


def line_series() -> Series:
    x = np.linspace(0.0, 1.0, 20)
    return Series(x, x**2, label="square")


def test_line_plot() -> None:
    """Test a line plot is an SVG document with the first series tagged."""
    svg = emit_svg(line_series(), "line", title="Square", xlabel="x", ylabel="y")
    text = svg.decode("utf-8")
    assert text.lstrip().startswith("<?xml") or text.lstrip().startswith("<svg")
    assert "<svg" in text
    assert 'id="series"' in text


def test_several_series_get_distinct_ids() -> None:
    """Test later series are tagged series-1, series-2, ..."""
    x = np.arange(5.0)
    svg = emit_svg([Series(x, x), Series(x, -x), Series(x, 2 * x)], "scatter")
    text = svg.decode("utf-8")
    assert 'id="series"' in text
    assert 'id="series-1"' in text
    assert 'id="series-2"' in text


def test_heatmap(tmp_path: Path) -> None:
    """Test a heatmap is written to disk with the returned bytes."""
    axis = np.linspace(-1.0, 1.0, 8)
    z = np.exp(-(axis[:, None] ** 2 + axis[None, :] ** 2))
    path = tmp_path / "density.svg"
    svg = emit_svg(Series(axis, axis, z=z), "heatmap", path=path, title="Density")
    assert path.read_bytes() == svg


def test_deterministic() -> None:
    """Test identical inputs give identical bytes."""
    assert emit_svg(line_series(), "line") == emit_svg(line_series(), "line")


def test_log_axes_and_rug() -> None:
    """Test logarithmic axes and an event rug render."""
    x = np.logspace(-6, -1, 6)
    svg = emit_svg(Series(x, x), "line", logx=True, logy=True, rug=np.array([1e-4, 1e-3]))
    assert 'id="rug"' in svg.decode("utf-8")


def test_heatmap_needs_values() -> None:
    """Test a heatmap series without z is rejected."""
    axis = np.linspace(0.0, 1.0, 4)
    with pytest.raises(ArgumentError, match="z values"):
        emit_svg(Series(axis, axis), "heatmap")


@pytest.mark.parametrize("series", [[], Series(np.zeros(0), np.zeros(0))])
def test_empty_series(series: Series | list[Series]) -> None:
    """Test there must be something to plot."""
    with pytest.raises(ArgumentError, match="empty"):
        emit_svg(series, "line")


def test_unknown_kind() -> None:
    """Test an unknown plot kind is rejected."""
    with pytest.raises(ArgumentError, match="kind"):
        emit_svg(line_series(), "bar")  # type: ignore[arg-type]
