"""
Skill memory: the most recent trajectory of every skill.

Each skill has a slot holding exactly one episode's worth of
observations, indexed by time.  Storing the observation for time `t`
replaces whatever was there from the previous episode, so in the
middle of an episode the active skill's slot holds the start of the
current episode followed by the end of the previous one.
"""

from typing import List

import numpy as np

from vendirl.env2d import Actor, EnvConfig, rollout
from vendirl.exceptions import (
    MemoryIndexError,
    ParameterError,
    ShapeError,
    UnfilledMemoryError,
)
from vendirl.kernels.spec import SkillSample
from vendirl.numerics import FloatArray


class SkillMemory:
    """One time-indexed buffer of `T + 1` observations per skill.

    A memory belongs to a single scene and is modified in place.
    """

    def __init__(self, n: int, episode_len: int, obs_dim: int = 2) -> None:
        if n < 1 or episode_len < 1 or obs_dim < 1:
            raise ParameterError(
                f"Bad memory dimensions: {n} skills, T={episode_len}, D={obs_dim}"
            )
        self.buffers = np.zeros((n, episode_len + 1, obs_dim))
        self.filled = np.zeros((n, episode_len + 1), dtype=bool)

    @property
    def n(self) -> int:
        return self.buffers.shape[0]

    @property
    def capacity(self) -> int:
        """Number of observations per skill (`T + 1`)."""
        return self.buffers.shape[1]

    def __repr__(self) -> str:
        return (
            f"<SkillMemory n={self.n} capacity={self.capacity}"
            f" filled={int(self.filled.sum())}/{self.filled.size}>"
        )

    def copy(self) -> "SkillMemory":
        mem = SkillMemory(self.n, self.capacity - 1, self.buffers.shape[2])
        mem.buffers[...] = self.buffers
        mem.filled[...] = self.filled
        return mem

    def store(self, skill: int, t: int, obs: FloatArray) -> None:
        """Store the observation for `skill` at time `t`.

        Raises:
            MemoryIndexError: If `skill` or `t` is out of range.
        """
        if not 0 <= skill < self.n:
            raise MemoryIndexError(f"Skill {skill} out of range [0, {self.n})")
        if not 0 <= t < self.capacity:
            raise MemoryIndexError(f"Time index {t} out of range [0, {self.capacity})")
        self.buffers[skill, t] = obs
        self.filled[skill, t] = True

    def read(self, skill: int) -> FloatArray:
        """Copy of one skill's buffer."""
        return self.buffers[skill].copy()

    def is_complete(self, skill: int) -> bool:
        return bool(self.filled[skill].all())

    def refill(self, actor: Actor, cfg: EnvConfig, rng: np.random.Generator) -> None:
        """Replace every slot with a fresh rollout of its skill.

        Skills are rolled out in order, all drawing from `rng`.
        """
        if cfg.episode_len + 1 != self.capacity:
            raise ShapeError(
                f"Memory holds {self.capacity} observations per skill, but"
                f" episodes have {cfg.episode_len + 1}"
            )
        for skill in range(self.n):
            self.buffers[skill] = rollout(actor, skill, cfg, rng)
        self.filled[...] = True

    def snapshot_samples(self) -> List[SkillSample]:
        """One single-trajectory `SkillSample` per skill.

        These are copies, so changing the memory afterwards does not
        change them.

        Raises:
            UnfilledMemoryError: If any slot is not completely filled.
        """
        if not self.filled.all():
            missing = [s for s in range(self.n) if not self.is_complete(s)]
            raise UnfilledMemoryError(f"Memory slots not filled for skills {missing}")
        return [SkillSample.of(self.buffers[skill].copy()) for skill in range(self.n)]


def store(mem: SkillMemory, skill: int, t: int, obs: FloatArray) -> SkillMemory:
    """Store an observation (in place) and return the memory."""
    mem.store(skill, t, obs)
    return mem


def refill(
    mem: SkillMemory, actor: Actor, cfg: EnvConfig, rng: np.random.Generator
) -> SkillMemory:
    """Refill every slot from fresh rollouts (in place) and return the memory."""
    mem.refill(actor, cfg, rng)
    return mem


def snapshot_samples(mem: SkillMemory) -> List[SkillSample]:
    """See `SkillMemory.snapshot_samples`."""
    return mem.snapshot_samples()
