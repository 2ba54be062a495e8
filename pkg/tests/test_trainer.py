import io
import math
from dataclasses import replace
from typing import List

import numpy as np
import pytest
from scipy.stats import chisquare

from vendirl.env2d import EnvConfig
from vendirl.exceptions import (
    NumericalFailureError,
    ParameterError,
    TrainingError,
    UnsyncedSceneError,
    VendiRLError,
)
from vendirl.kernels import SimilaritySpec, SkillSample, build_kernel_matrix
from vendirl.nn import MLP
from vendirl.policy import EpisodeBatch, PolicyHyper, PolicySkillSet
from vendirl.trainer import (
    METRIC_COLUMNS,
    MetricLog,
    MetricRow,
    SceneState,
    TrainConfig,
    VendiReward,
    evaluate,
    goal_effective_number,
    init_rng,
    make_scenes,
    resolve_threads,
    run,
    run_episode,
    state_coverage,
    sync_scenes,
    train,
    update_kernel_row,
)
from vendirl.vendi import KernelMatrix, RewardTransform


def small_config(**kwargs) -> TrainConfig:
    defaults = dict(
        n_skills=3,
        epochs=3,
        scenes=2,
        seed=42,
        hyper=PolicyHyper(hidden=(8,), learning_rate=1e-2),
        env=EnvConfig(episode_len=8),
        eval_every=2,
        threads=1,
    )
    defaults.update(kwargs)
    return TrainConfig(**defaults)  # type: ignore[arg-type]


def without_time(rows: List[MetricRow]) -> List[MetricRow]:
    return [replace(row, wall_time=0.0) for row in rows]


def synced_scenes(cfg: TrainConfig, policy: PolicySkillSet) -> List[SceneState]:
    return sync_scenes(make_scenes(cfg), policy, cfg)


class Quiet:
    """Rewards nothing and learns nothing."""

    method = "quiet"

    def sync(self, scene, policy, cfg) -> None:
        pass

    def begin_episode(self, scene, cfg) -> None:
        pass

    def reward(self, scene, t, obs, cfg) -> float:
        return 0.0

    def update(self, policy, batch, cfg):
        return policy

    def check(self, scene, cfg) -> None:
        pass


class Recording(VendiReward):
    """Keeps every reward handed out."""

    def __init__(self) -> None:
        super().__init__()
        self.rewards: List[float] = []

    def reward(self, scene, t, obs, cfg) -> float:
        reward = super().reward(scene, t, obs, cfg)
        self.rewards.append(reward)
        return reward


class Exploding(Quiet):
    """Fails on a particular step."""

    def __init__(self, fail_at: int) -> None:
        self.fail_at = fail_at

    def reward(self, scene, t, obs, cfg) -> float:
        if t == self.fail_at:
            raise NumericalFailureError("boom")
        return 0.0


def test_config_validation() -> None:
    with pytest.raises(ParameterError):
        small_config(n_skills=1)
    with pytest.raises(ParameterError):
        small_config(scenes=0)
    with pytest.raises(ParameterError):
        small_config(steps_per_epoch=9)
    with pytest.raises(ParameterError):
        small_config(threads=0)
    with pytest.raises(ParameterError):
        small_config(spec=SimilaritySpec.single("knn_f1_overlap"))
    knn = SimilaritySpec.single("knn_f1_overlap", clamp_negative=True)
    cfg = small_config(spec=knn)
    assert cfg.episode_steps == 8
    assert small_config(steps_per_epoch=4).episode_steps == 4


def test_eval_epochs() -> None:
    cfg = small_config(epochs=5, eval_every=2)
    assert [e for e in range(5) if cfg.is_eval_epoch(e)] == [1, 3, 4]
    cfg = small_config(epochs=5, eval_every=0)
    assert [e for e in range(5) if cfg.is_eval_epoch(e)] == [4]


def test_no_epochs() -> None:
    cfg = small_config(epochs=0)
    policy, log = train(cfg)
    assert len(log) == 0
    fresh = PolicySkillSet.create(3, cfg.env, cfg.hyper, init_rng(cfg.seed))
    for p, q in zip(policy.net.params, fresh.net.params):
        np.testing.assert_array_equal(p, q)


def test_train() -> None:
    cfg = small_config()
    evals: List[int] = []
    policy, log = train(cfg, on_eval=lambda epoch, p, result: evals.append(epoch))
    assert evals == [1, 2]
    assert len(log) == cfg.epochs * cfg.scenes
    assert [(row.epoch, row.scene) for row in log.rows] == [
        (e, s) for e in range(3) for s in range(2)
    ]
    for row in log.rows:
        assert row.method == "vendirl"
        assert row.train_vs_mean is not None
        assert 1.0 - 1e-9 <= row.train_vs_mean <= 3.0 + 1e-9
        assert math.log(1 / 3) - 1e-9 <= row.train_reward_mean <= 1e-9
        if row.epoch in evals:
            assert row.eval_vs is not None and row.eval_coverage is not None
            assert 1.0 - 1e-9 <= row.eval_vs <= 3.0 + 1e-9
            assert 0.0 < row.eval_coverage <= 1.0
        else:
            assert row.eval_vs is None
    assert [epoch for epoch, _ in log.eval_scores()] == [1, 2]
    assert sum(log.goal_counts.values()) == cfg.epochs * cfg.scenes
    assert policy.opt_state.step == cfg.epochs


def test_penalty_rewards() -> None:
    _, log = train(small_config(transform=RewardTransform.PENALTY, epochs=2))
    for row in log.rows:
        assert 1 - 3 - 1e-9 <= row.train_reward_mean <= 1e-9


@pytest.mark.parametrize(
    "transform,low",
    [
        (RewardTransform.PENALTY, 1.0 - 3),
        (RewardTransform.LOG_FRACTION, math.log(1 / 3)),
    ],
)
def test_step_reward_range(transform: RewardTransform, low: float) -> None:
    cfg = small_config(transform=transform, epochs=3)
    source = Recording()
    run(cfg, source)
    assert len(source.rewards) == cfg.epochs * cfg.scenes * cfg.episode_steps
    outside = [r for r in source.rewards if not low - 1e-9 <= r <= 1e-9]
    assert outside == []


def test_deterministic() -> None:
    cfg = small_config()
    p1, log1 = train(cfg)
    p2, log2 = train(cfg)
    assert without_time(log1.rows) == without_time(log2.rows)
    for a, b in zip(p1.net.params, p2.net.params):
        np.testing.assert_array_equal(a, b)
    _, log3 = train(small_config(seed=43))
    assert without_time(log1.rows) != without_time(log3.rows)


@pytest.mark.slow
def test_threads_do_not_matter() -> None:
    p1, log1 = train(small_config(scenes=4, threads=1))
    p2, log2 = train(small_config(scenes=4, threads=3))
    assert without_time(log1.rows) == without_time(log2.rows)
    for a, b in zip(p1.net.params, p2.net.params):
        np.testing.assert_array_equal(a, b)


def test_single_scene() -> None:
    _, log = train(small_config(scenes=1, epochs=2))
    assert [row.scene for row in log.rows] == [0, 0]


def test_untrained_baseline() -> None:
    cfg = small_config(epochs=2)
    policy, log = train(cfg, learn=False)
    assert all(row.method == "random" for row in log.rows)
    fresh = PolicySkillSet.create(3, cfg.env, cfg.hyper, init_rng(cfg.seed))
    for p, q in zip(policy.net.params, fresh.net.params):
        np.testing.assert_array_equal(p, q)


def test_update_kernel_row() -> None:
    cfg = small_config()
    policy = PolicySkillSet.create(3, cfg.env, cfg.hyper, init_rng(0))
    scene = synced_scenes(cfg, policy)[0]
    assert scene.kernel is not None
    before = scene.kernel.sim.copy()
    # Nothing changed, so nothing changes
    update_kernel_row(scene, 1, cfg.spec)
    np.testing.assert_array_equal(scene.kernel.sim, before)
    scene.memory.store(1, 3, np.array([0.9, 0.1]))
    update_kernel_row(scene, 1, cfg.spec)
    after = scene.kernel.sim.copy()
    update_kernel_row(scene, 1, cfg.spec)
    np.testing.assert_array_equal(scene.kernel.sim, after)
    # Only row and column 1 move
    others = [0, 2]
    block = np.ix_(others, others)
    np.testing.assert_array_equal(after[block], before[block])
    assert not np.array_equal(after[1], before[1])
    fresh = build_kernel_matrix(scene.memory.snapshot_samples(), cfg.spec)
    np.testing.assert_allclose(after, fresh.sim, atol=1e-12)
    with pytest.raises(UnsyncedSceneError):
        update_kernel_row(make_scenes(cfg)[0], 0, cfg.spec)


def test_sync() -> None:
    cfg = small_config(scenes=3)
    # Practically deterministic: tiny, clamped standard deviation
    rng = np.random.default_rng(8)
    net = MLP.init([5, 8, 4], rng, zero_last=False)
    policy = PolicySkillSet(
        n=3,
        obs_dim=2,
        action_dim=2,
        net=net,
        action_scale=0.05,
        log_std_min=-40.0,
        log_std_max=-39.0,
    )
    scenes = synced_scenes(cfg, policy)
    for scene in scenes[1:]:
        assert scene.kernel is not None and scenes[0].kernel is not None
        np.testing.assert_allclose(scene.kernel.sim, scenes[0].kernel.sim, atol=1e-9)
        assert scene.vs == pytest.approx(scenes[0].vs, abs=1e-9)
    # With the usual noise, scenes see different things
    noisy = PolicySkillSet.create(3, cfg.env, cfg.hyper, init_rng(0))
    scores = {scene.vs for scene in synced_scenes(cfg, noisy)}
    assert len(scores) > 1


def test_check() -> None:
    cfg = small_config()
    policy = PolicySkillSet.create(3, cfg.env, cfg.hyper, init_rng(0))
    source = VendiReward()
    scene = synced_scenes(cfg, policy)[0]
    episode = run_episode(scene, policy, cfg, source)
    assert len(episode) == 8
    assert len(scene.vs_trace) == 8
    source.check(scene, cfg)
    assert scene.kernel is not None
    sim = scene.kernel.sim.copy()
    sim[0, 1] = sim[1, 0] = sim[0, 1] * 0.5
    scene.kernel = KernelMatrix(sim)
    with pytest.raises(VendiRLError):
        source.check(scene, cfg)


@pytest.mark.slow
def test_goals_uniform() -> None:
    cfg = small_config(n_skills=4, scenes=1, steps_per_epoch=1)
    policy = PolicySkillSet.create(4, cfg.env, cfg.hyper, init_rng(0))
    scene = make_scenes(cfg)[0]
    counts = np.zeros(4)
    for _ in range(10000):
        episode = run_episode(scene, policy, cfg, Quiet())
        counts[int(episode.goals[0])] += 1
    assert chisquare(counts).pvalue > 0.01


def test_training_error() -> None:
    cfg = small_config()
    with pytest.raises(TrainingError) as info:
        run(cfg, Exploding(fail_at=2))
    assert (info.value.epoch, info.value.scene, info.value.step) == (0, 0, 2)
    assert isinstance(info.value.__cause__, NumericalFailureError)
    assert "epoch 0, scene 0, step 2" in str(info.value)


def test_goal_effective_number() -> None:
    assert goal_effective_number([5, 5, 5, 5]) == pytest.approx(4.0)
    assert goal_effective_number([10, 0, 0]) == pytest.approx(1.0)
    assert goal_effective_number([0, 0]) == 0.0
    assert 1.0 < goal_effective_number([9, 1]) < 2.0


def test_coverage() -> None:
    env = EnvConfig()
    assert state_coverage([SkillSample.of([[0.5, 0.5]])], env) == 0.01
    # The upper bound belongs to the last cell
    corners = SkillSample.of([[0.0, 0.0], [1.0, 1.0], [0.99, 0.99]])
    assert state_coverage([corners], env) == 0.02
    grid = np.array(
        [[(i + 0.5) / 10, (j + 0.5) / 10] for i in range(10) for j in range(10)]
    )
    assert state_coverage([SkillSample.of(grid)], env) == 1.0


def test_evaluate() -> None:
    cfg = small_config()
    policy = PolicySkillSet.create(3, cfg.env, cfg.hyper, init_rng(0))
    r1 = evaluate(policy, cfg, np.random.default_rng(1))
    r2 = evaluate(policy, cfg, np.random.default_rng(1))
    assert r1.vs == r2.vs
    assert 1.0 <= r1.vs <= 3.0 + 1e-9
    assert len(r1.samples) == 3
    assert r1.samples[0].n_rollouts == cfg.eval_spec.rollouts_per_skill


def test_metric_log() -> None:
    log = MetricLog()
    out = io.StringIO()
    log.write_csv(out)
    assert out.getvalue() == ",".join(METRIC_COLUMNS) + "\n"
    log.append(MetricRow("vendirl", 1, 0, 2.5, -0.25, None, None, 1.5))
    with pytest.raises(ValueError):
        log.append(MetricRow("vendirl", 0, 0, 2.5, -0.25, None, None, 1.5))
    log.append(MetricRow("misl", 1, 1, None, 0.1, 2.0, 0.5, 1.5))
    out = io.StringIO()
    log.write_csv(out)
    lines = out.getvalue().splitlines()
    assert lines[1] == "vendirl,1,0,2.5,-0.25,,,"
    assert lines[2] == "misl,1,1,,0.1,2.0,0.5,"
    out = io.StringIO()
    log.write_csv(out, record_wall_time=True)
    assert out.getvalue().splitlines()[1].endswith(",1.5")
    assert log.eval_scores() == [(1, 2.0)]


def test_resolve_threads(monkeypatch: pytest.MonkeyPatch) -> None:
    assert resolve_threads(small_config(threads=4, scenes=2)) == 2
    assert resolve_threads(small_config(threads=1, scenes=8)) == 1
    monkeypatch.setenv("VENDIRL_THREADS", "1")
    assert resolve_threads(small_config(threads=None, scenes=8)) == 1
    monkeypatch.setenv("VENDIRL_THREADS", "lots")
    assert 1 <= resolve_threads(small_config(threads=None, scenes=8)) <= 8


def test_episode_batch() -> None:
    cfg = small_config(steps_per_epoch=5)
    policy = PolicySkillSet.create(3, cfg.env, cfg.hyper, init_rng(0))
    scenes = synced_scenes(cfg, policy)
    source = VendiReward()
    batch = EpisodeBatch(
        tuple(run_episode(scene, policy, cfg, source) for scene in scenes)
    )
    assert len(batch) == 10
    np.testing.assert_array_equal(batch.obs[0], cfg.env.start_state)
    np.testing.assert_array_equal(batch.obs[1:5], batch.next_obs[0:4])
