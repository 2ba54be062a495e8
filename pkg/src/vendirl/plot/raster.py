"""
Raster output through Pillow.
"""

from os import PathLike
from typing import Tuple, Union

from PIL import Image, ImageDraw, ImageFont

from vendirl.plot.renderers import renderer, visible_paths
from vendirl.plot.style import PlotOptions, Viewport, title_for
from vendirl.trajectories import TrajectoryTable

TITLE_SIZE = 14


def draw_trajectories(
    table: TrajectoryTable,
    options: PlotOptions,
    *,
    low: Tuple[float, float],
    high: Tuple[float, float],
    image: Union[Image.Image, None] = None,
) -> Image.Image:
    """Draw trajectories on a (new, by default) Pillow image."""
    if image is None:
        image = Image.new("RGB", (options.width, options.height), "white")
    view = Viewport(low, high, options)
    make_color = options.skill_colors()
    draw = ImageDraw.ImageDraw(image)
    draw.rectangle(view.frame, outline="black")
    font = ImageFont.load_default(TITLE_SIZE)
    draw.text(
        xy=(options.width / 2, options.margin / 2),
        text=title_for(table.eval_vs),
        font=font,
        fill="black",
        anchor="mm",
    )
    width = max(1, round(options.line_width))
    for skill, _, points in visible_paths(table, options):
        pixels = [view.to_pixel(x, y) for x, y in points]
        color = make_color(skill)
        if len(pixels) == 1:
            draw.point(pixels, fill=color)
        else:
            draw.line(pixels, fill=color, width=width, joint="curve")
    return image


@renderer(suffix=".png")
def render_png(
    table: TrajectoryTable,
    path: Union[str, PathLike],
    options: PlotOptions,
    *,
    low: Tuple[float, float],
    high: Tuple[float, float],
) -> None:
    """Write trajectories to a PNG file."""
    draw_trajectories(table, options, low=low, high=high).save(path, format="PNG")
