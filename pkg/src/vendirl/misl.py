"""
Mutual-information skill learning, for comparison.

A discriminator tries to tell which skill is active from the
observation reached after each step, and the reward is how well it
succeeds: `log q(g | s') - log p(g)` with `p(g)` uniform.  Training
runs through the same loop as VendiRL (`trainer.run`) with this as
the reward source, and the discriminator is updated at the same
barrier as the policy.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Sequence, Tuple, Union

import numpy as np
from scipy.special import log_softmax, softmax

from vendirl.exceptions import (
    EmptyInputError,
    NumericalFailureError,
    ParameterError,
    ShapeError,
)
from vendirl.nn import MLP, OptimizerKind, OptimizerState, Params, ascend
from vendirl.numerics import FloatArray
from vendirl.policy import EpisodeBatch, PolicySkillSet, reinforce_update
from vendirl.trainer import (
    EvalHook,
    MetricLog,
    SceneState,
    TrainConfig,
    aux_rng,
    run,
)

LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class MislHyper:
    """Discriminator hyperparameters.

    Attributes:
        hidden: Widths of the hidden (tanh) layers.
        learning_rate: Fixed step size.
        optimizer: Adam or plain gradient descent.
        max_grad_norm: Clip gradients to this global norm.
        reward_floor: Rewards are never lower than this.
        updates_per_epoch: Discriminator steps per policy update.
    """

    hidden: Tuple[int, ...] = (64, 64)
    learning_rate: float = 3e-4
    optimizer: OptimizerKind = OptimizerKind.ADAM
    max_grad_norm: float = 5.0
    reward_floor: float = -20.0
    updates_per_epoch: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if any(h < 1 for h in self.hidden):
            raise ParameterError(f"Hidden widths must be positive: {self.hidden}")
        if not self.learning_rate > 0:
            raise ParameterError(
                f"Learning rate must be positive, got {self.learning_rate}"
            )
        if not self.reward_floor < 0:
            raise ParameterError(
                f"reward_floor must be negative, got {self.reward_floor}"
            )
        if self.updates_per_epoch < 1:
            raise ParameterError(
                f"updates_per_epoch must be positive, got {self.updates_per_epoch}"
            )


@dataclass(frozen=True)
class Discriminator:
    """Classifier from an observation to logits over `n` skills.

    Initialized like the policy, with a zero output layer, so it
    starts out uniform.
    """

    n: int
    obs_dim: int
    net: MLP
    opt_state: OptimizerState = field(default_factory=OptimizerState)

    def __post_init__(self) -> None:
        sizes = self.net.sizes
        if sizes[0] != self.obs_dim or sizes[-1] != self.n:
            raise ShapeError(
                f"Network sizes {sizes} do not map {self.obs_dim}D"
                f" observations to {self.n} skills"
            )

    @classmethod
    def create(
        cls, n: int, obs_dim: int, hyper: MislHyper, rng: np.random.Generator
    ) -> "Discriminator":
        sizes = [obs_dim, *hyper.hidden, n]
        return cls(n=n, obs_dim=obs_dim, net=MLP.init(sizes, rng, zero_last=True))

    def logits(self, obs: FloatArray) -> FloatArray:
        """Logits for a batch of observations (one row each).

        Raises:
            NumericalFailureError: If any logit is not finite.
        """
        obs = np.atleast_2d(np.asarray(obs, dtype=np.float64))
        if obs.shape[1] != self.obs_dim:
            raise ShapeError(f"Expected {self.obs_dim}D observations, got {obs.shape}")
        out, _ = self.net.forward(obs)
        if not np.all(np.isfinite(out)):
            raise NumericalFailureError("Discriminator produced non-finite logits")
        return out

    def log_probs(self, obs: FloatArray) -> FloatArray:
        return log_softmax(self.logits(obs), axis=1)

    def probs(self, obs: FloatArray) -> FloatArray:
        return softmax(self.logits(obs), axis=1)

    def predict(self, obs: FloatArray) -> FloatArray:
        return np.argmax(self.logits(obs), axis=1)


def misl_reward(
    disc: Discriminator,
    obs: FloatArray,
    goal: int,
    n: int,
    floor: float = -20.0,
) -> float:
    """`log q(goal | obs) + log n`, clipped to `[floor, log n]`."""
    if not 0 <= goal < n:
        raise ParameterError(f"Goal {goal} out of range [0, {n})")
    if n != disc.n:
        raise ShapeError(f"Discriminator has {disc.n} skills, not {n}")
    logp = float(disc.log_probs(obs)[0, goal])
    log_n = math.log(n)
    return min(max(logp + log_n, floor), log_n)


def cross_entropy_and_grad(
    disc: Discriminator, obs: FloatArray, goals: Sequence[int]
) -> Tuple[float, Params]:
    """Mean cross-entropy of `goals` given `obs`, and its gradient."""
    goals = np.asarray(goals, dtype=np.int64).reshape(-1)
    obs = np.atleast_2d(np.asarray(obs, dtype=np.float64))
    if len(goals) == 0:
        raise EmptyInputError("Cannot train a discriminator on an empty batch")
    if len(obs) != len(goals):
        raise ShapeError(f"{len(obs)} observations but {len(goals)} goals")
    if np.any(goals < 0) or np.any(goals >= disc.n):
        raise ParameterError(f"Goals must be in [0, {disc.n})")
    out, inputs = disc.net.forward(obs)
    if not np.all(np.isfinite(out)):
        raise NumericalFailureError("Discriminator produced non-finite logits")
    logp = log_softmax(out, axis=1)
    rows = np.arange(len(goals))
    loss = -float(np.mean(logp[rows, goals]))
    grad_out = np.exp(logp)
    grad_out[rows, goals] -= 1.0
    grad_out /= len(goals)
    return loss, disc.net.backward(inputs, grad_out)


def discriminator_update(
    disc: Discriminator,
    obs: FloatArray,
    goals: Sequence[int],
    hyper: MislHyper,
) -> Discriminator:
    """One gradient step on the cross-entropy loss.

    Returns:
        A new discriminator; the one passed in is not modified.
    Raises:
        EmptyInputError: If the batch is empty.
        NumericalFailureError: If the loss or gradient is not finite.
    """
    loss, grads = cross_entropy_and_grad(disc, obs, goals)
    if not math.isfinite(loss):
        raise NumericalFailureError("Non-finite discriminator loss")
    params, opt_state = ascend(
        disc.net.params,
        tuple(-g for g in grads),
        disc.opt_state,
        kind=hyper.optimizer,
        learning_rate=hyper.learning_rate,
        max_grad_norm=hyper.max_grad_norm,
    )
    return replace(disc, net=disc.net.with_params(params), opt_state=opt_state)


def discriminator_accuracy(
    disc: Discriminator, obs: FloatArray, goals: Sequence[int]
) -> float:
    """Fraction of observations whose most likely skill is the right one."""
    goals = np.asarray(goals, dtype=np.int64).reshape(-1)
    if len(goals) == 0:
        raise EmptyInputError("No observations to classify")
    return float(np.mean(disc.predict(obs) == goals))


class MislReward:
    """Rewards from a discriminator, which learns alongside the policy.

    The discriminator is read by every scene during an epoch and
    replaced in `update`, after all scenes are done.
    """

    method = "misl"

    def __init__(self, disc: Discriminator, hyper: MislHyper) -> None:
        self.disc = disc
        self.hyper = hyper

    def sync(self, scene: SceneState, policy: PolicySkillSet, cfg: TrainConfig) -> None:
        scene.vs_trace = []

    def begin_episode(self, scene: SceneState, cfg: TrainConfig) -> None:
        pass

    def reward(
        self, scene: SceneState, t: int, obs: FloatArray, cfg: TrainConfig
    ) -> float:
        return misl_reward(
            self.disc, obs, scene.goal, cfg.n_skills, self.hyper.reward_floor
        )

    def update(
        self, policy: PolicySkillSet, batch: EpisodeBatch, cfg: TrainConfig
    ) -> PolicySkillSet:
        policy = reinforce_update(policy, batch, cfg.hyper)
        next_obs = batch.next_obs
        goals = batch.goals
        for _ in range(self.hyper.updates_per_epoch):
            self.disc = discriminator_update(self.disc, next_obs, goals, self.hyper)
        LOGGER.debug(
            "discriminator accuracy on last batch: %.3f",
            discriminator_accuracy(self.disc, next_obs, goals),
        )
        return policy

    def check(self, scene: SceneState, cfg: TrainConfig) -> None:
        pass


def misl_source(cfg: TrainConfig, hyper: Union[MislHyper, None] = None) -> MislReward:
    """Reward source with a fresh discriminator seeded from `cfg.seed`."""
    hyper = MislHyper() if hyper is None else hyper
    disc = Discriminator.create(cfg.n_skills, cfg.env.obs_dim, hyper, aux_rng(cfg.seed))
    return MislReward(disc, hyper)


def train_misl(
    cfg: TrainConfig,
    hyper: Union[MislHyper, None] = None,
    *,
    on_eval: Union[EvalHook, None] = None,
) -> Tuple[PolicySkillSet, MetricLog]:
    """Train skills with discriminator rewards (see `trainer.train`)."""
    return run(cfg, misl_source(cfg, hyper), on_eval=on_eval)
