"""
Plain SVG output, with no timestamps or other varying content so the
same trajectories always give the same bytes.
"""

from os import PathLike
from typing import List, Tuple, Union
from xml.sax.saxutils import escape, quoteattr

from vendirl.plot.renderers import renderer, visible_paths
from vendirl.plot.style import PlotOptions, Viewport, svg_color, title_for
from vendirl.trajectories import TrajectoryTable

TITLE_SIZE = 14


def _num(x: float) -> str:
    return f"{x:.2f}"


def svg_document(
    table: TrajectoryTable,
    options: PlotOptions,
    *,
    low: Tuple[float, float],
    high: Tuple[float, float],
) -> str:
    """Render trajectories as the text of an SVG document."""
    view = Viewport(low, high, options)
    make_color = options.skill_colors()
    left, top, right, bottom = view.frame
    lines: List[str] = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{options.width}"'
        f' height="{options.height}" viewBox="0 0 {options.width} {options.height}">',
        f'<rect width="{options.width}" height="{options.height}" fill="white"/>',
        f'<rect class="bounds" x="{_num(left)}" y="{_num(top)}"'
        f' width="{_num(right - left)}" height="{_num(bottom - top)}"'
        ' fill="none" stroke="black" stroke-width="1"/>',
        f'<text x="{_num(options.width / 2)}"'
        f' y="{_num(options.margin / 2 + TITLE_SIZE / 3)}"'
        f' font-family="sans-serif" font-size="{TITLE_SIZE}"'
        f' text-anchor="middle">{escape(title_for(table.eval_vs))}</text>',
    ]
    for skill, rollout, points in visible_paths(table, options):
        color = svg_color(make_color(skill))
        pixels = (view.to_pixel(x, y) for x, y in points)
        coords = " ".join(f"{_num(px)},{_num(py)}" for px, py in pixels)
        lines.append(
            f'<polyline data-skill="{skill}" data-rollout="{rollout}" fill="none"'
            f" stroke={quoteattr(color)} stroke-width=\"{options.line_width}\""
            f' stroke-linejoin="round" points="{coords}"/>'
        )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


@renderer(suffix=".svg")
def render_svg(
    table: TrajectoryTable,
    path: Union[str, PathLike],
    options: PlotOptions,
    *,
    low: Tuple[float, float],
    high: Tuple[float, float],
) -> None:
    """Write trajectories to an SVG file."""
    with open(path, "w", encoding="utf-8", newline="\n") as outfh:
        outfh.write(svg_document(table, options, low=low, high=high))
