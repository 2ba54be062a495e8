"""
A point moving around in a bounded 2D box.

The dynamics are about as simple as they can be: the action is a
velocity, clipped to a maximum norm, optionally perturbed by Gaussian
noise, and the resulting position is clamped to the box.  The
observation is the position.
"""

from dataclasses import dataclass
from typing import Protocol, Tuple

import numpy as np

from vendirl.exceptions import EpisodeOverError, ParameterError
from vendirl.numerics import FloatArray

Point = Tuple[float, float]


@dataclass(frozen=True)
class EnvConfig:
    """Configuration of the 2D environment.

    Attributes:
        low: Lower-left corner of the box.
        high: Upper-right corner of the box.
        start_state: Where every episode starts.
        max_action_norm: Actions are clipped to this norm.
        episode_len: Number of steps `T` in an episode.
        action_noise_std: Standard deviation of Gaussian noise added
            to each (clipped) action.
    """

    low: Point = (0.0, 0.0)
    high: Point = (1.0, 1.0)
    start_state: Point = (0.5, 0.5)
    max_action_norm: float = 0.05
    episode_len: int = 64
    action_noise_std: float = 0.0

    def __post_init__(self) -> None:
        for name in ("low", "high", "start_state"):
            value = tuple(float(x) for x in getattr(self, name))
            if len(value) != 2:
                raise ParameterError(f"{name} must be a 2D point, got {value}")
            object.__setattr__(self, name, value)
        if not all(lo < hi for lo, hi in zip(self.low, self.high)):
            raise ParameterError(f"Empty bounds {self.low} - {self.high}")
        if not all(
            lo <= x <= hi for x, lo, hi in zip(self.start_state, self.low, self.high)
        ):
            raise ParameterError(f"Start state {self.start_state} is out of bounds")
        if self.episode_len < 1:
            raise ParameterError(
                f"episode_len must be positive, got {self.episode_len}"
            )
        if not self.max_action_norm > 0:
            raise ParameterError(
                f"max_action_norm must be positive, got {self.max_action_norm}"
            )
        if not self.action_noise_std >= 0:
            raise ParameterError(
                f"action_noise_std must be non-negative, got {self.action_noise_std}"
            )

    @property
    def obs_dim(self) -> int:
        return 2

    @property
    def action_dim(self) -> int:
        return 2


@dataclass(frozen=True)
class EnvState:
    """Position of the point and how far into the episode we are."""

    position: FloatArray
    step_index: int = 0

    def __post_init__(self) -> None:
        position = np.array(self.position, dtype=np.float64)
        position.flags.writeable = False
        object.__setattr__(self, "position", position)


class Actor(Protocol):
    """Anything that can pick an action for a goal (e.g. a policy)."""

    def act(
        self, state: EnvState, goal: int, rng: np.random.Generator
    ) -> Tuple[FloatArray, float]: ...


def reset(cfg: EnvConfig) -> EnvState:
    """Start a new episode."""
    return EnvState(position=np.array(cfg.start_state), step_index=0)


def clip_action(action: FloatArray, max_norm: float) -> FloatArray:
    """Scale `action` down (if necessary) so its norm is at most `max_norm`."""
    a = np.array(action, dtype=np.float64)
    norm = float(np.linalg.norm(a))
    if norm > max_norm:
        a *= max_norm / norm
    return a


def step(
    state: EnvState, action: FloatArray, cfg: EnvConfig, rng: np.random.Generator
) -> EnvState:
    """Move the point by `action` (clipped, maybe with some noise).

    The random stream is only consumed if `cfg.action_noise_std` is
    non-zero.

    Raises:
        EpisodeOverError: If the episode has already run `T` steps.
    """
    if state.step_index >= cfg.episode_len:
        raise EpisodeOverError(
            f"Episode is over after {cfg.episode_len} steps, call reset()"
        )
    displacement = clip_action(action, cfg.max_action_norm)
    if cfg.action_noise_std > 0:
        displacement = displacement + rng.normal(
            0.0, cfg.action_noise_std, size=displacement.shape
        )
    position = np.clip(state.position + displacement, cfg.low, cfg.high)
    return EnvState(position=position, step_index=state.step_index + 1)


def rollout(
    actor: Actor, goal: int, cfg: EnvConfig, rng: np.random.Generator
) -> FloatArray:
    """Run one full episode for a goal.

    Returns:
        The `(T + 1) x 2` trajectory of positions, including the start.
    """
    state = reset(cfg)
    traj = np.empty((cfg.episode_len + 1, cfg.obs_dim))
    traj[0] = state.position
    for t in range(cfg.episode_len):
        action, _ = actor.act(state, goal, rng)
        state = step(state, action, cfg, rng)
        traj[t + 1] = state.position
    return traj
