from typing import Tuple

import numpy as np
import pytest

from vendirl.env2d import EnvConfig, EnvState
from vendirl.exceptions import (
    MemoryIndexError,
    ParameterError,
    ShapeError,
    UnfilledMemoryError,
    VendiRLError,
)
from vendirl.memory import SkillMemory, refill, snapshot_samples, store
from vendirl.numerics import FloatArray

DIRECTIONS = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0)]


class ByGoal:
    """Pushes each goal in its own direction."""

    def act(
        self, state: EnvState, goal: int, rng: np.random.Generator
    ) -> Tuple[FloatArray, float]:
        return np.array(DIRECTIONS[goal]), 0.0


def test_store() -> None:
    mem = SkillMemory(3, 4)
    assert mem.capacity == 5
    store(mem, 1, 0, np.array([0.1, 0.2]))
    np.testing.assert_array_equal(mem.read(1)[0], [0.1, 0.2])
    assert mem.filled[1, 0] and not mem.filled[1, 1]
    assert not mem.is_complete(1)
    with pytest.raises(MemoryIndexError):
        mem.store(3, 0, np.zeros(2))
    with pytest.raises(MemoryIndexError):
        mem.store(0, 5, np.zeros(2))
    # Still an IndexError, and a VendiRLError for the command line
    with pytest.raises(IndexError):
        mem.store(-1, 0, np.zeros(2))
    with pytest.raises(VendiRLError):
        mem.store(-1, 0, np.zeros(2))
    with pytest.raises(ParameterError):
        SkillMemory(0, 4)


def test_refill() -> None:
    cfg = EnvConfig(episode_len=4)
    mem = refill(SkillMemory(3, 4), ByGoal(), cfg, np.random.default_rng(0))
    assert all(mem.is_complete(s) for s in range(3))
    np.testing.assert_allclose(mem.read(0)[-1], [0.7, 0.5])
    np.testing.assert_allclose(mem.read(1)[-1], [0.5, 0.7])
    np.testing.assert_allclose(mem.read(2)[-1], [0.3, 0.5])
    with pytest.raises(ShapeError):
        mem.refill(ByGoal(), EnvConfig(episode_len=5), np.random.default_rng(0))


def test_snapshot() -> None:
    mem = SkillMemory(3, 4)
    with pytest.raises(UnfilledMemoryError):
        snapshot_samples(mem)
    # Also a LookupError
    with pytest.raises(LookupError):
        mem.snapshot_samples()
    cfg = EnvConfig(episode_len=4)
    mem.refill(ByGoal(), cfg, np.random.default_rng(0))
    samples = snapshot_samples(mem)
    assert len(samples) == 3
    assert samples[0].trajectories[0].shape == (5, 2)
    before = samples[0].trajectories[0].copy()
    # Overwriting the memory leaves the snapshot alone
    mem.store(0, 2, np.array([0.0, 0.0]))
    np.testing.assert_array_equal(samples[0].trajectories[0], before)


def test_mixed_episode() -> None:
    # Midway through an episode, a slot holds the new beginning and the
    # old end
    cfg = EnvConfig(episode_len=4)
    mem = SkillMemory(3, 4)
    mem.refill(ByGoal(), cfg, np.random.default_rng(0))
    old = mem.read(0)
    mem.store(0, 1, np.array([0.5, 0.45]))
    new = mem.read(0)
    np.testing.assert_array_equal(new[1], [0.5, 0.45])
    np.testing.assert_array_equal(new[2:], old[2:])


def test_copy() -> None:
    mem = SkillMemory(2, 3)
    mem.store(0, 0, np.array([1.0, 1.0]))
    other = mem.copy()
    other.store(0, 0, np.array([2.0, 2.0]))
    np.testing.assert_array_equal(mem.read(0)[0], [1.0, 1.0])
    assert other.filled[0, 0]
