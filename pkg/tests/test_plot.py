import re
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from vendirl.exceptions import ParameterError
from vendirl.plot import (
    DEFAULT_COLOR_CYCLE,
    PlotOptions,
    color_maker,
    draw_trajectories,
    pillow_color,
    render,
    svg_color,
    svg_document,
)
from vendirl.trajectories import TrajectoryTable

POLYLINE = re.compile(
    r'<polyline data-skill="(\d+)" data-rollout="(\d+)"[^>]*stroke="([^"]+)"'
)


def grid_table(n: int = 8, rollouts: int = 5, meta=None) -> TrajectoryTable:
    rng = np.random.default_rng(n)
    paths = {}
    for skill in range(n):
        angle = 2 * np.pi * skill / n
        direction = np.array([np.cos(angle), np.sin(angle)])
        for rollout in range(rollouts):
            steps = np.linspace(0, 0.4, 10)[:, np.newaxis] * direction
            paths[(skill, rollout)] = np.clip(
                0.5 + steps + rng.normal(scale=0.01, size=(10, 2)), 0, 1
            )
    return TrajectoryTable(paths=paths, meta=dict(meta or {}))


def test_colors() -> None:
    assert pillow_color("red") == "red"
    assert pillow_color((1, 2, 3)) == (1, 2, 3)
    assert pillow_color((1.0, 0.0, 0.5)) == (255, 0, 127)
    assert svg_color((255, 0, 127)) == "#ff007f"
    assert svg_color("blue") == "blue"
    maker = color_maker(["red", "green"])
    assert [maker(skill) for skill in (0, 1, 2, 3)] == ["red", "green", "red", "green"]
    assert color_maker([(1.0, 0.0, 0.0)])(7) == (255, 0, 0)
    with pytest.raises(ParameterError):
        color_maker([])


def test_options() -> None:
    with pytest.raises(ParameterError):
        PlotOptions(colors=())
    with pytest.raises(ParameterError):
        PlotOptions(width=60, margin=32)
    with pytest.raises(ParameterError):
        PlotOptions(rollouts_per_skill=0)


def test_svg_empty() -> None:
    svg = svg_document(TrajectoryTable(), PlotOptions(), low=(0, 0), high=(1, 1))
    assert svg.startswith("<?xml")
    assert "<polyline" not in svg
    assert 'class="bounds"' in svg
    assert "Skill trajectories" in svg


def test_svg_skills() -> None:
    table = grid_table(meta={"eval_vs": "7.5"})
    svg = svg_document(table, PlotOptions(), low=(0, 0), high=(1, 1))
    lines = POLYLINE.findall(svg)
    assert len(lines) == 40
    colors = {skill: color for skill, _, color in lines}
    assert len(set(colors.values())) == 8
    assert [colors[str(s)] for s in range(8)] == list(DEFAULT_COLOR_CYCLE[:8])
    # Every rollout of a skill has the same color
    assert all(colors[skill] == color for skill, _, color in lines)
    assert "Effective number of skills: 7.500" in svg
    fewer = svg_document(
        table, PlotOptions(rollouts_per_skill=2), low=(0, 0), high=(1, 1)
    )
    assert len(POLYLINE.findall(fewer)) == 16


def test_render_svg(tmp_path: Path) -> None:
    table = grid_table()
    render(table, tmp_path / "a.svg")
    render(table, tmp_path / "b.svg")
    assert (tmp_path / "a.svg").read_bytes() == (tmp_path / "b.svg").read_bytes()


def test_render_png(tmp_path: Path) -> None:
    table = grid_table(n=3, rollouts=2)
    options = PlotOptions(width=200, height=160, margin=20)
    path = tmp_path / "skills.png"
    render(table, path, options)
    with Image.open(path) as image:
        assert image.size == (200, 160)
        assert image.format == "PNG"
    image = draw_trajectories(table, options, low=(0, 0), high=(1, 1))
    # Something other than white got drawn
    assert image.getextrema() != ((255, 255), (255, 255), (255, 255))


def test_render_bounds_from_meta(tmp_path: Path) -> None:
    table = grid_table(n=2, rollouts=1, meta={"low": "0.0, 0.0", "high": "2.0, 2.0"})
    render(table, tmp_path / "meta.svg")
    bare = TrajectoryTable(paths=table.paths)
    render(bare, tmp_path / "args.svg", low=(0.0, 0.0), high=(2.0, 2.0))
    render(bare, tmp_path / "default.svg")
    assert (tmp_path / "meta.svg").read_bytes() == (
        tmp_path / "args.svg"
    ).read_bytes()
    assert (tmp_path / "meta.svg").read_bytes() != (
        tmp_path / "default.svg"
    ).read_bytes()


def test_unknown_suffix(tmp_path: Path) -> None:
    with pytest.raises(ParameterError) as info:
        render(grid_table(), tmp_path / "skills.gif")
    assert ".png" in str(info.value) and ".svg" in str(info.value)
    with pytest.raises(ParameterError):
        render(grid_table(), tmp_path / "skills")
