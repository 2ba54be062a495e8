"""
Colors, options and coordinate mapping shared by the renderers.
"""

from dataclasses import dataclass
from typing import Callable, Sequence, Tuple, Union

from vendirl.exceptions import ParameterError

Color = Union[str, Tuple[int, int, int], Tuple[float, float, float]]
"""Type alias for things that can be used as colors."""
PillowColor = Union[str, Tuple[int, int, int]]
"""Type alias for things Pillow accepts as colors."""
ColorMaker = Callable[[int], PillowColor]
"""Function giving the color of a skill."""
DEFAULT_COLOR_CYCLE: Tuple[str, ...] = (
    "blue",
    "orange",
    "green",
    "red",
    "purple",
    "brown",
    "pink",
    "gray",
    "olive",
    "cyan",
)
"""Default color cycle (same as matplotlib)"""


def pillow_color(color: Color) -> PillowColor:
    """Convert colors to a form acceptable to Pillow."""
    if isinstance(color, str):
        return color
    r, g, b = color
    if isinstance(r, int) and isinstance(g, int) and isinstance(b, int):
        return (r, g, b)
    r, g, b = (int(x * 255) for x in color)
    return (r, g, b)


def svg_color(color: Color) -> str:
    """Convert colors to something SVG understands."""
    pcolor = pillow_color(color)
    if isinstance(pcolor, str):
        return pcolor
    return "#%02x%02x%02x" % pcolor


def color_maker(colors: Sequence[Color]) -> ColorMaker:
    """Colors for skills, cycling through `colors` in skill order.

    Raises:
        ParameterError: If there are no colors.
    """
    if not colors:
        raise ParameterError("Need at least one color")
    pcolors = [pillow_color(c) for c in colors]

    def maker(skill: int) -> PillowColor:
        return pcolors[skill % len(pcolors)]

    return maker


@dataclass(frozen=True)
class PlotOptions:
    """How trajectory plots look.

    Attributes:
        colors: Color cycle, one color per skill in skill order.
        rollouts_per_skill: Draw at most this many rollouts per skill.
        width: Image width in pixels.
        height: Image height in pixels.
        margin: Space around the environment bounds, in pixels.
        line_width: Width of trajectory lines, in pixels.
    """

    colors: Tuple[str, ...] = DEFAULT_COLOR_CYCLE
    rollouts_per_skill: int = 5
    width: int = 480
    height: int = 480
    margin: int = 32
    line_width: float = 1.5

    def __post_init__(self) -> None:
        object.__setattr__(self, "colors", tuple(str(c) for c in self.colors))
        if not self.colors:
            raise ParameterError("Need at least one color")
        if self.rollouts_per_skill < 1:
            raise ParameterError(
                f"rollouts_per_skill must be positive, got {self.rollouts_per_skill}"
            )
        if self.width <= 2 * self.margin or self.height <= 2 * self.margin:
            raise ParameterError(
                f"Image of {self.width}x{self.height} has no room inside"
                f" margins of {self.margin}"
            )
        if not self.line_width > 0:
            raise ParameterError(f"line_width must be positive, got {self.line_width}")

    def skill_colors(self) -> ColorMaker:
        return color_maker(self.colors)


@dataclass(frozen=True)
class Viewport:
    """Maps environment coordinates to pixels (y pointing down)."""

    low: Tuple[float, float]
    high: Tuple[float, float]
    options: PlotOptions

    def to_pixel(self, x: float, y: float) -> Tuple[float, float]:
        opts = self.options
        sx = (opts.width - 2 * opts.margin) / (self.high[0] - self.low[0])
        sy = (opts.height - 2 * opts.margin) / (self.high[1] - self.low[1])
        return (
            opts.margin + (x - self.low[0]) * sx,
            opts.height - opts.margin - (y - self.low[1]) * sy,
        )

    @property
    def frame(self) -> Tuple[float, float, float, float]:
        """Pixel (left, top, right, bottom) of the bounds."""
        left, bottom = self.to_pixel(*self.low)
        right, top = self.to_pixel(*self.high)
        return left, top, right, bottom


def title_for(eval_vs: Union[float, None]) -> str:
    if eval_vs is None:
        return "Skill trajectories"
    return f"Effective number of skills: {eval_vs:.3f}"
