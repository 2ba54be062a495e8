"""
Pictures of skills: one colored line per trajectory, one color per skill.
"""

from os import PathLike
from pathlib import Path
from typing import Tuple, Union

from vendirl.exceptions import ParameterError
from vendirl.plot.raster import draw_trajectories, render_png
from vendirl.plot.renderers import lookup, suffixes
from vendirl.plot.style import (
    DEFAULT_COLOR_CYCLE,
    PlotOptions,
    color_maker,
    pillow_color,
    svg_color,
)
from vendirl.plot.svg import render_svg, svg_document
from vendirl.trajectories import TrajectoryTable

__all__ = [
    "DEFAULT_COLOR_CYCLE",
    "PlotOptions",
    "color_maker",
    "draw_trajectories",
    "pillow_color",
    "render",
    "render_png",
    "render_svg",
    "svg_color",
    "svg_document",
]


def render(
    table: TrajectoryTable,
    path: Union[str, PathLike],
    options: Union[PlotOptions, None] = None,
    *,
    low: Tuple[float, float] = (0.0, 0.0),
    high: Tuple[float, float] = (1.0, 1.0),
) -> None:
    """Draw trajectories to a file, in the format given by its suffix.

    Bounds stored in the table's metadata (as `low` and `high`) take
    precedence over the ones passed here.

    Raises:
        ParameterError: If there is no renderer for the suffix.
    """
    suffix = Path(path).suffix
    func = lookup(suffix)
    if func is None:
        raise ParameterError(
            f"Don't know how to draw {suffix or 'files without a suffix'},"
            f" try one of {', '.join(suffixes())}"
        )
    func(
        table,
        path,
        PlotOptions() if options is None else options,
        low=table.point("low") or low,
        high=table.point("high") or high,
    )
