"""Deterministic SVG plots rendered with matplotlib's SVG backend."""

import io
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import matplotlib
import numpy as np
from matplotlib.figure import Figure

from odegrad.core.exceptions import ArgumentError
from odegrad.core.io import atomic_write_bytes
from odegrad.core.tensor import Tensor

logger = logging.getLogger(__name__)

PlotKind = Literal["line", "scatter", "heatmap"]

# Constants
WIDTH_PX = 640
HEIGHT_PX = 480
POINTS_PER_INCH = 72
SERIES_GID = "series"
SVG_RC = {"svg.hashsalt": "odegrad", "svg.fonttype": "path"}


@dataclass(frozen=True)
class Series:
    """Data for one plotted series; heatmaps use x and y as axes and z[len(y), len(x)]."""

    x: Tensor
    y: Tensor
    label: str | None = None
    z: Tensor | None = None

    def __len__(self) -> int:
        return int(np.size(self.x))


def _draw(ax, kind: PlotKind, series: list[Series]) -> None:
    for k, s in enumerate(series):
        gid = SERIES_GID if k == 0 else f"{SERIES_GID}-{k}"
        if kind == "line":
            ax.plot(s.x, s.y, label=s.label, gid=gid)
        elif kind == "scatter":
            ax.plot(s.x, s.y, "o", markersize=3, linestyle="none", label=s.label, gid=gid)
        else:
            if s.z is None:
                raise ArgumentError("heatmap series needs z values")
            extent = (np.min(s.x), np.max(s.x), np.min(s.y), np.max(s.y))
            ax.imshow(np.asarray(s.z), origin="lower", extent=extent, aspect="auto", gid=gid)


def emit_svg(
    series: Series | list[Series],
    kind: PlotKind,
    path: Path | None = None,
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    logx: bool = False,
    logy: bool = False,
    rug: Tensor | None = None,
) -> bytes:
    """Render series as a self-contained 640x480 SVG document with tick-labelled axes.

    Args:
        series: One series or several drawn on the same axes
        kind: line, scatter or heatmap
        path: Where to write the document atomically (optional)
        title: Axes title
        xlabel: x axis label
        ylabel: y axis label
        logx: Logarithmic x axis
        logy: Logarithmic y axis
        rug: Optional x positions drawn as tick marks along the bottom (event times)

    Returns:
        SVG document bytes

    Raises:
        ArgumentError: If there is nothing to plot
    """
    series = [series] if isinstance(series, Series) else list(series)
    if not series or any(len(s) == 0 for s in series):
        raise ArgumentError("emit_svg: empty series")
    if kind not in ("line", "scatter", "heatmap"):
        raise ArgumentError(f"emit_svg: unknown plot kind {kind!r}")

    with matplotlib.rc_context(SVG_RC):
        fig = Figure(
            figsize=(WIDTH_PX / POINTS_PER_INCH, HEIGHT_PX / POINTS_PER_INCH),
            dpi=POINTS_PER_INCH,
        )
        ax = fig.add_subplot()
        _draw(ax, kind, series)
        if rug is not None and len(rug):
            bottom = ax.get_ylim()[0]
            ax.plot(rug, np.full(len(rug), bottom), "|", color="k", markersize=12, gid="rug")
        if logx:
            ax.set_xscale("log")
        if logy:
            ax.set_yscale("log")
        ax.set_title(title)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if any(s.label for s in series) and kind != "heatmap":
            ax.legend()
        buffer = io.BytesIO()
        fig.savefig(buffer, format="svg", metadata={"Date": None})
    data = buffer.getvalue()

    if path is not None:
        atomic_write_bytes(Path(path), data)
        logger.debug(f"Wrote {kind} plot: {path}")
    return data
