"""
Common interface for trajectory renderers.
"""

from os import PathLike
from typing import Callable, Dict, List, Protocol, Tuple, Union

from vendirl.numerics import FloatArray
from vendirl.plot.style import PlotOptions
from vendirl.trajectories import TrajectoryTable


class Renderer(Protocol):
    """Protocol for functions drawing trajectories to a file."""

    def __call__(
        self,
        table: TrajectoryTable,
        path: Union[str, PathLike],
        options: PlotOptions,
        *,
        low: Tuple[float, float],
        high: Tuple[float, float],
    ) -> None: ...

    __name__: str


RENDERERS: Dict[str, Renderer] = {}


def renderer(*, suffix: str) -> Callable[[Renderer], Renderer]:
    """Decorator to register a renderer for a file name suffix."""

    def register(func: Renderer) -> Renderer:
        RENDERERS[suffix.lower()] = func
        return func

    return register


def lookup(suffix: str) -> Union[Renderer, None]:
    """Find the renderer for a suffix (like `.svg`)."""
    return RENDERERS.get(suffix.lower())


def suffixes() -> List[str]:
    return sorted(RENDERERS)


def visible_paths(
    table: TrajectoryTable, options: PlotOptions
) -> List[Tuple[int, int, FloatArray]]:
    """(skill, rollout, points) for everything that should be drawn,
    in skill then rollout order."""
    paths = []
    for skill in table.skills:
        for rollout, points in enumerate(table.rollouts(skill)):
            if rollout >= options.rollouts_per_skill:
                break
            paths.append((skill, rollout, points))
    return paths
