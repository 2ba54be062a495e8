"""
Training loop: skills rewarded by the diversity they add.

Every epoch, each scene (an independent copy of the environment with
its own skill memory, kernel matrix and random stream) refills its
memory from the current skills, picks a goal uniformly at random and
follows the corresponding skill for one episode.  Each step updates
the active skill's row of the kernel matrix and is rewarded with the
resulting Vendi Score.  The episodes from all scenes then go into a
single policy update.

Scenes run in worker threads, but everything a scene touches is its
own, and the shared policy is only read while they run, so results
do not depend on the number of threads.
"""

import csv
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import (
    IO,
    Callable,
    Dict,
    List,
    Protocol,
    Sequence,
    Tuple,
    TypeVar,
    Union,
)

import numpy as np

from vendirl.env2d import EnvConfig, EnvState, reset, rollout, step
from vendirl.exceptions import (
    ParameterError,
    TrainingError,
    UnsyncedSceneError,
    VendiRLError,
)
from vendirl.kernels import SimilaritySpec, SkillSample, build_kernel_matrix, kernel_row
from vendirl.memory import SkillMemory
from vendirl.numerics import FloatArray, shannon_entropy
from vendirl.policy import (
    Episode,
    EpisodeBatch,
    PolicyHyper,
    PolicySkillSet,
    reinforce_update,
)
from vendirl.vendi import (
    KernelMatrix,
    RewardTransform,
    effective_unique_skills,
    transform_score,
    vendi_score,
)

LOGGER = logging.getLogger(__name__)
THREADS_ENV = "VENDIRL_THREADS"
COVERAGE_BINS = 10
# Keys mixed into the seed for streams that are not per-scene
_INIT_KEY = 0
_EVAL_KEY = 1
_AUX_KEY = 2
_SCENE_KEY = 3


def default_train_spec() -> SimilaritySpec:
    return SimilaritySpec.single("mmd_linear")


def default_eval_spec() -> SimilaritySpec:
    # F1 overlap is not guaranteed PSD, and an evaluation should never
    # kill a long run over it
    return SimilaritySpec.single(
        "knn_f1_overlap", rollouts_per_skill=5, clamp_negative=True
    )


@dataclass(frozen=True)
class TrainConfig:
    """Everything needed to reproduce a training run.

    Attributes:
        n_skills: Number of skills (goals).
        epochs: Number of epochs (one policy update each).
        steps_per_epoch: Steps per scene per epoch (`None` for one
            full episode).
        scenes: Number of parallel scenes.
        transform: How Vendi Scores become rewards.
        spec: Similarity used for training rewards.
        eval_spec: Similarity used for evaluation.
        seed: Seed for all random streams.
        hyper: Policy hyperparameters.
        env: Environment configuration.
        eval_every: Evaluate every this many epochs (0 to only
            evaluate after the last one).
        threads: Scene worker threads (`None` to use `VENDIRL_THREADS`
            or the number of CPUs, 1 for the single-threaded
            reference mode).
        check_rewards: On evaluation epochs, recompute each scene's
            kernel from scratch and check it against the incrementally
            maintained one.
    """

    n_skills: int = 8
    epochs: int = 500
    steps_per_epoch: Union[int, None] = None
    scenes: int = 8
    transform: RewardTransform = RewardTransform.LOG_FRACTION
    spec: SimilaritySpec = field(default_factory=default_train_spec)
    eval_spec: SimilaritySpec = field(default_factory=default_eval_spec)
    seed: int = 0
    hyper: PolicyHyper = field(default_factory=PolicyHyper)
    env: EnvConfig = field(default_factory=EnvConfig)
    eval_every: int = 10
    threads: Union[int, None] = None
    check_rewards: bool = True

    def __post_init__(self) -> None:
        if self.n_skills < 2:
            raise ParameterError(f"Need at least 2 skills, got {self.n_skills}")
        if self.scenes < 1:
            raise ParameterError(f"Need at least 1 scene, got {self.scenes}")
        if self.epochs < 0:
            raise ParameterError(f"epochs must be non-negative, got {self.epochs}")
        if not 1 <= self.episode_steps <= self.env.episode_len:
            raise ParameterError(
                f"steps_per_epoch must be between 1 and {self.env.episode_len},"
                f" got {self.steps_per_epoch}"
            )
        if self.eval_every < 0:
            raise ParameterError(f"eval_every must be >= 0, got {self.eval_every}")
        if self.threads is not None and self.threads < 1:
            raise ParameterError(f"threads must be positive, got {self.threads}")
        if "knn_f1_overlap" in self.spec.kinds and not self.spec.clamp_negative:
            raise ParameterError(
                "knn_f1_overlap is not positive semidefinite, set clamp_negative"
                " to use it for training rewards"
            )

    @property
    def episode_steps(self) -> int:
        if self.steps_per_epoch is None:
            return self.env.episode_len
        return self.steps_per_epoch

    def is_eval_epoch(self, epoch: int) -> bool:
        if epoch == self.epochs - 1:
            return True
        return self.eval_every > 0 and (epoch + 1) % self.eval_every == 0


def _rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def scene_rng(seed: int, scene: int) -> np.random.Generator:
    return _rng(seed, _SCENE_KEY, scene)


def eval_rng(seed: int, epoch: int) -> np.random.Generator:
    """Evaluation stream, independent of the training streams."""
    return _rng(seed, _EVAL_KEY, epoch)


def standalone_eval_rng(seed: int) -> np.random.Generator:
    """Stream for evaluating a policy outside of training."""
    return _rng(seed, _EVAL_KEY)


def init_rng(seed: int) -> np.random.Generator:
    return _rng(seed, _INIT_KEY)


def aux_rng(seed: int) -> np.random.Generator:
    """Stream for anything else a method needs to initialize."""
    return _rng(seed, _AUX_KEY)


@dataclass
class SceneState:
    """Everything belonging to one scene.  Only the scene's own worker
    touches it while an epoch is running."""

    index: int
    env_state: EnvState
    memory: SkillMemory
    rng: np.random.Generator
    kernel: Union[KernelMatrix, None] = None
    goal: int = 0
    vs: float = 1.0
    vs_trace: List[float] = field(default_factory=list)


def make_scenes(cfg: TrainConfig) -> List[SceneState]:
    return [
        SceneState(
            index=i,
            env_state=reset(cfg.env),
            memory=SkillMemory(cfg.n_skills, cfg.env.episode_len, cfg.env.obs_dim),
            rng=scene_rng(cfg.seed, i),
        )
        for i in range(cfg.scenes)
    ]


class RewardSource(Protocol):
    """Where rewards come from, and what is learned from them."""

    method: str

    def sync(self, scene: SceneState, policy: PolicySkillSet, cfg: TrainConfig) -> None:
        """Bring a scene up to date with the shared policy (between epochs)."""
        ...

    def begin_episode(self, scene: SceneState, cfg: TrainConfig) -> None: ...

    def reward(
        self, scene: SceneState, t: int, obs: FloatArray, cfg: TrainConfig
    ) -> float:
        """Reward for the transition from time `t` into `obs`."""
        ...

    def update(
        self, policy: PolicySkillSet, batch: EpisodeBatch, cfg: TrainConfig
    ) -> PolicySkillSet:
        """Learn from one epoch of experience (single writer)."""
        ...

    def check(self, scene: SceneState, cfg: TrainConfig) -> None:
        """Verify internal consistency of a scene (on evaluation epochs)."""
        ...


def update_kernel_row(
    scene: SceneState,
    skill: int,
    spec: SimilaritySpec,
    mem: Union[SkillMemory, None] = None,
) -> SceneState:
    """Recompute row and column `skill` of the scene's kernel matrix
    from the current contents of its memory."""
    if scene.kernel is None:
        raise UnsyncedSceneError(
            "Scene has no kernel matrix yet, call sync_scenes first"
        )
    mem = scene.memory if mem is None else mem
    row = kernel_row(mem.snapshot_samples(), skill, spec)
    scene.kernel = scene.kernel.with_row(skill, row)
    return scene


class VendiReward:
    """Rewards from the Vendi Score of each scene's skill memory.

    Args:
        learn: Update the policy (set to false for an untrained
            baseline with identical bookkeeping).
    """

    def __init__(self, learn: bool = True) -> None:
        self.learn = learn
        self.method = "vendirl" if learn else "random"

    def sync(self, scene: SceneState, policy: PolicySkillSet, cfg: TrainConfig) -> None:
        scene.memory.refill(policy, cfg.env, scene.rng)
        scene.kernel = build_kernel_matrix(scene.memory.snapshot_samples(), cfg.spec)
        scene.vs = vendi_score(scene.kernel, clamp_negative=cfg.spec.clamp_negative)

    def begin_episode(self, scene: SceneState, cfg: TrainConfig) -> None:
        scene.memory.store(scene.goal, 0, scene.env_state.position)
        scene.vs_trace = []

    def reward(
        self, scene: SceneState, t: int, obs: FloatArray, cfg: TrainConfig
    ) -> float:
        scene.memory.store(scene.goal, t + 1, obs)
        update_kernel_row(scene, scene.goal, cfg.spec)
        assert scene.kernel is not None
        vs_after = vendi_score(scene.kernel, clamp_negative=cfg.spec.clamp_negative)
        reward = transform_score(vs_after, scene.vs, cfg.transform, cfg.n_skills)
        scene.vs = vs_after
        scene.vs_trace.append(vs_after)
        return reward

    def update(
        self, policy: PolicySkillSet, batch: EpisodeBatch, cfg: TrainConfig
    ) -> PolicySkillSet:
        if not self.learn:
            return policy
        return reinforce_update(policy, batch, cfg.hyper)

    def check(self, scene: SceneState, cfg: TrainConfig) -> None:
        assert scene.kernel is not None
        fresh = build_kernel_matrix(scene.memory.snapshot_samples(), cfg.spec)
        if not np.allclose(fresh.sim, scene.kernel.sim, rtol=0, atol=1e-9):
            raise VendiRLError("Incrementally updated kernel differs from a rebuild")
        vs = vendi_score(fresh, clamp_negative=cfg.spec.clamp_negative)
        if abs(vs - scene.vs) > 1e-9:
            raise VendiRLError(
                f"Scene reward score {scene.vs} differs from recomputed {vs}"
            )


@dataclass(frozen=True)
class EvalResult:
    """Diversity of a set of skills.

    Attributes:
        vs: Effective number of unique skills under the evaluation
            similarity.
        coverage: Fraction of the cells of a grid over the environment
            bounds visited by any trajectory.
        samples: The trajectories evaluated, one sample per skill.
    """

    vs: float
    coverage: float
    samples: Tuple[SkillSample, ...]


def state_coverage(
    samples: Sequence[SkillSample], env: EnvConfig, bins: int = COVERAGE_BINS
) -> float:
    """Fraction of a `bins x bins` grid over the bounds that is visited."""
    points = np.concatenate([s.pooled for s in samples])
    low = np.asarray(env.low)
    high = np.asarray(env.high)
    cells = np.floor((points - low) / (high - low) * bins).astype(np.int64)
    cells = np.clip(cells, 0, bins - 1)
    visited = {(int(x), int(y)) for x, y in cells}
    return len(visited) / (bins * bins)


def collect_samples(
    policy: PolicySkillSet, env: EnvConfig, rollouts: int, rng: np.random.Generator
) -> List[SkillSample]:
    """`rollouts` fresh trajectories of every skill."""
    return [
        SkillSample.from_sequence(
            [rollout(policy, skill, env, rng) for _ in range(rollouts)]
        )
        for skill in range(policy.n)
    ]


def evaluate(
    policy: PolicySkillSet, cfg: TrainConfig, rng: np.random.Generator
) -> EvalResult:
    """Roll out every skill and measure how diverse they are."""
    samples = collect_samples(policy, cfg.env, cfg.eval_spec.rollouts_per_skill, rng)
    return EvalResult(
        vs=effective_unique_skills(samples, cfg.eval_spec),
        coverage=state_coverage(samples, cfg.env),
        samples=tuple(samples),
    )


def goal_effective_number(counts: Sequence[int]) -> float:
    """Effective number of goals actually selected (exponential of the
    entropy of the goal frequencies)."""
    total = float(sum(counts))
    if total == 0:
        return 0.0
    return math.exp(shannon_entropy(np.asarray(counts, dtype=np.float64) / total))


@dataclass(frozen=True)
class MetricRow:
    method: str
    epoch: int
    scene: int
    train_vs_mean: Union[float, None]
    train_reward_mean: float
    eval_vs: Union[float, None]
    eval_coverage: Union[float, None]
    wall_time: float


METRIC_COLUMNS = [
    "method",
    "epoch",
    "scene",
    "train_vs_mean",
    "train_reward_mean",
    "eval_vs",
    "eval_coverage",
    "wall_time",
]


def _fmt(value: Union[float, int, str, None]) -> str:
    if value is None:
        return ""
    return repr(value) if isinstance(value, float) else str(value)


@dataclass
class MetricLog:
    """Per-epoch, per-scene training metrics."""

    rows: List[MetricRow] = field(default_factory=list)
    goal_counts: Dict[int, int] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.rows)

    def append(self, row: MetricRow) -> None:
        if self.rows and row.epoch < self.rows[-1].epoch:
            raise ValueError("Metric rows must be appended in epoch order")
        self.rows.append(row)

    def eval_scores(self) -> List[Tuple[int, float]]:
        """(epoch, eval_vs) for every evaluation."""
        seen = {}
        for row in self.rows:
            if row.eval_vs is not None:
                seen[row.epoch] = row.eval_vs
        return sorted(seen.items())

    def write_csv(self, outfh: IO[str], record_wall_time: bool = False) -> None:
        """Write as CSV (wall times are left blank unless asked for, so
        that reruns are byte-identical)."""
        writer = csv.writer(outfh, lineterminator="\n")
        writer.writerow(METRIC_COLUMNS)
        for row in self.rows:
            writer.writerow(
                [
                    row.method,
                    row.epoch,
                    row.scene,
                    _fmt(row.train_vs_mean),
                    _fmt(row.train_reward_mean),
                    _fmt(row.eval_vs),
                    _fmt(row.eval_coverage),
                    _fmt(row.wall_time) if record_wall_time else "",
                ]
            )


T = TypeVar("T")


def resolve_threads(cfg: TrainConfig) -> int:
    """Number of scene worker threads to use."""
    if cfg.threads is not None:
        threads = cfg.threads
    else:
        threads = os.cpu_count() or 1
        env = os.environ.get(THREADS_ENV)
        if env:
            try:
                threads = min(threads, int(env))
            except ValueError:
                LOGGER.warning("Ignoring bad %s=%r", THREADS_ENV, env)
    return max(1, min(threads, cfg.scenes))


def map_scenes(
    func: Callable[[SceneState], T], scenes: Sequence[SceneState], threads: int
) -> List[T]:
    """Apply `func` to every scene, in parallel if `threads > 1`.
    Results are in scene order."""
    if threads <= 1 or len(scenes) <= 1:
        return [func(scene) for scene in scenes]
    with ThreadPoolExecutor(max_workers=threads) as executor:
        return list(executor.map(func, scenes))


def sync_scenes(
    scenes: Sequence[SceneState],
    policy: PolicySkillSet,
    cfg: TrainConfig,
    source: Union[RewardSource, None] = None,
    threads: int = 1,
) -> List[SceneState]:
    """Refill every scene's memory from the shared policy and rebuild
    its kernel (for the default Vendi reward)."""
    src = VendiReward() if source is None else source

    def sync(scene: SceneState) -> SceneState:
        src.sync(scene, policy, cfg)
        return scene

    return map_scenes(sync, scenes, threads)


def run_episode(
    scene: SceneState,
    policy: PolicySkillSet,
    cfg: TrainConfig,
    source: RewardSource,
    epoch: int = 0,
) -> Episode:
    """Follow a uniformly chosen skill for one epoch in one scene."""
    n_steps = cfg.episode_steps
    obs = np.empty((n_steps, cfg.env.obs_dim))
    next_obs = np.empty((n_steps, cfg.env.obs_dim))
    actions = np.empty((n_steps, cfg.env.action_dim))
    rewards = np.empty(n_steps)
    logprobs = np.empty(n_steps)
    t = None
    try:
        scene.goal = int(scene.rng.integers(cfg.n_skills))
        scene.env_state = reset(cfg.env)
        source.begin_episode(scene, cfg)
        for t in range(n_steps):
            state = scene.env_state
            action, logprob = policy.act(state, scene.goal, scene.rng)
            scene.env_state = step(state, action, cfg.env, scene.rng)
            obs[t] = state.position
            next_obs[t] = scene.env_state.position
            actions[t] = action
            logprobs[t] = logprob
            rewards[t] = source.reward(scene, t, scene.env_state.position, cfg)
    except (VendiRLError, ArithmeticError, ValueError) as e:
        raise TrainingError(str(e), epoch=epoch, scene=scene.index, step=t) from e
    return Episode(
        obs=obs,
        goals=np.full(n_steps, scene.goal, dtype=np.int64),
        actions=actions,
        rewards=rewards,
        logprobs=logprobs,
        next_obs=next_obs,
    )


EvalHook = Callable[[int, PolicySkillSet, EvalResult], None]


def run(
    cfg: TrainConfig,
    source: RewardSource,
    *,
    policy: Union[PolicySkillSet, None] = None,
    on_eval: Union[EvalHook, None] = None,
) -> Tuple[PolicySkillSet, MetricLog]:
    """Generic training loop (see `train`) for any reward source."""
    if policy is None:
        policy = PolicySkillSet.create(
            cfg.n_skills, cfg.env, cfg.hyper, init_rng(cfg.seed)
        )
    log = MetricLog()
    scenes = make_scenes(cfg)
    threads = resolve_threads(cfg)
    started = time.perf_counter()
    for epoch in range(cfg.epochs):
        try:
            sync_scenes(scenes, policy, cfg, source, threads)
        except (VendiRLError, ArithmeticError, ValueError) as e:
            raise TrainingError(str(e), epoch=epoch) from e
        current = policy
        episodes = map_scenes(
            lambda scene: run_episode(scene, current, cfg, source, epoch),
            scenes,
            threads,
        )
        for scene in scenes:
            log.goal_counts[scene.goal] = log.goal_counts.get(scene.goal, 0) + 1
        try:
            policy = source.update(policy, EpisodeBatch(tuple(episodes)), cfg)
        except (VendiRLError, ArithmeticError, ValueError) as e:
            raise TrainingError(str(e), epoch=epoch) from e
        result = None
        if cfg.is_eval_epoch(epoch):
            try:
                for scene in scenes:
                    if cfg.check_rewards:
                        source.check(scene, cfg)
                result = evaluate(policy, cfg, eval_rng(cfg.seed, epoch))
            except (VendiRLError, ArithmeticError, ValueError) as e:
                raise TrainingError(str(e), epoch=epoch) from e
            if on_eval is not None:
                on_eval(epoch, policy, result)
        elapsed = time.perf_counter() - started
        for scene, episode in zip(scenes, episodes):
            log.append(
                MetricRow(
                    method=source.method,
                    epoch=epoch,
                    scene=scene.index,
                    train_vs_mean=(
                        float(np.mean(scene.vs_trace)) if scene.vs_trace else None
                    ),
                    train_reward_mean=float(np.mean(episode.rewards)),
                    eval_vs=None if result is None else result.vs,
                    eval_coverage=None if result is None else result.coverage,
                    wall_time=elapsed,
                )
            )
            LOGGER.debug(
                "epoch %d scene %d goal %d train VS %s",
                epoch,
                scene.index,
                scene.goal,
                _fmt(log.rows[-1].train_vs_mean),
            )
        train_vs = [r.train_vs_mean for r in log.rows[-cfg.scenes :]]
        summary = [f"epoch {epoch}"]
        if all(vs is not None for vs in train_vs):
            summary.append(f"train VS {np.mean(train_vs):.3f}")
        if result is not None:
            summary.append(f"eval VS {result.vs:.3f} coverage {result.coverage:.2f}")
            LOGGER.info("%s: %s", source.method, ", ".join(summary))
        else:
            LOGGER.debug("%s: %s", source.method, ", ".join(summary))
    return policy, log


def train(
    cfg: TrainConfig,
    *,
    learn: bool = True,
    on_eval: Union[EvalHook, None] = None,
) -> Tuple[PolicySkillSet, MetricLog]:
    """Train skills with VendiRL rewards.

    Args:
        cfg: Training configuration.
        learn: Update the policy (false gives the untrained baseline).
        on_eval: Called with the epoch, policy and evaluation result
            after every evaluation (e.g. to save checkpoints).
    Returns:
        The final policy and the metric log.
    Raises:
        TrainingError: If anything goes wrong, with the epoch, scene
            and step where it happened.
    """
    return run(cfg, VendiReward(learn=learn), on_eval=on_eval)
