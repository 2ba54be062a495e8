"""
Goal-conditioned Gaussian policy shared by all skills, and REINFORCE.

Skill `g` is the policy conditioned on goal `g`, i.e. the network
input is the observation concatenated with a one-hot encoding of the
goal.  The network outputs the mean and log standard deviation of a
diagonal Gaussian over actions.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from os import PathLike
from typing import List, Sequence, Tuple, Union

import numpy as np

from vendirl.env2d import EnvConfig, EnvState
from vendirl.exceptions import (
    EmptyInputError,
    InvalidInputError,
    NumericalFailureError,
    ParameterError,
    ShapeError,
)
from vendirl.nn import MLP, OptimizerKind, OptimizerState, Params, ascend
from vendirl.numerics import FloatArray

LOGGER = logging.getLogger(__name__)
LOG_2PI = math.log(2 * math.pi)
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class PolicyHyper:
    """Policy architecture and learning hyperparameters.

    Attributes:
        hidden: Widths of the hidden (tanh) layers.
        learning_rate: Fixed step size.
        discount: Discount factor for returns.
        max_grad_norm: Clip gradients to this global norm.
        optimizer: Adam or plain gradient ascent.
        whiten: Standardize returns over each batch (the baseline).
        log_std_min: Lower bound on action log standard deviation.
        log_std_max: Upper bound on action log standard deviation.
        action_scale: Units for the action mean and standard deviation
            (`None` means the environment's maximum action norm).
    """

    hidden: Tuple[int, ...] = (64, 64)
    learning_rate: float = 3e-4
    discount: float = 0.99
    max_grad_norm: float = 5.0
    optimizer: OptimizerKind = OptimizerKind.ADAM
    whiten: bool = True
    log_std_min: float = -5.0
    log_std_max: float = 1.0
    action_scale: Union[float, None] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if any(h < 1 for h in self.hidden):
            raise ParameterError(f"Hidden widths must be positive: {self.hidden}")
        if not 0 <= self.discount <= 1:
            raise ParameterError(f"Discount must be in [0, 1], got {self.discount}")
        if not self.learning_rate > 0:
            raise ParameterError(
                f"Learning rate must be positive, got {self.learning_rate}"
            )
        if not self.log_std_min < self.log_std_max:
            raise ParameterError("log_std_min must be less than log_std_max")
        if self.action_scale is not None and not self.action_scale > 0:
            raise ParameterError(
                f"action_scale must be positive, got {self.action_scale}"
            )


@dataclass(frozen=True)
class PolicySkillSet:
    """One network representing `n` skills.

    Use `PolicySkillSet.create` to make a new one.
    """

    n: int
    obs_dim: int
    action_dim: int
    net: MLP
    action_scale: float = 1.0
    log_std_min: float = -5.0
    log_std_max: float = 1.0
    opt_state: OptimizerState = field(default_factory=OptimizerState)

    def __post_init__(self) -> None:
        sizes = self.net.sizes
        if sizes[0] != self.obs_dim + self.n or sizes[-1] != 2 * self.action_dim:
            raise ShapeError(
                f"Network sizes {sizes} do not fit {self.n} skills,"
                f" {self.obs_dim}D observations and {self.action_dim}D actions"
            )

    @classmethod
    def create(
        cls,
        n: int,
        env: EnvConfig,
        hyper: PolicyHyper,
        rng: np.random.Generator,
    ) -> "PolicySkillSet":
        """New policy with a zero output layer (so every skill starts
        out as the same zero-mean random walk)."""
        sizes = [env.obs_dim + n, *hyper.hidden, 2 * env.action_dim]
        return cls(
            n=n,
            obs_dim=env.obs_dim,
            action_dim=env.action_dim,
            net=MLP.init(sizes, rng, zero_last=True),
            action_scale=(
                env.max_action_norm
                if hyper.action_scale is None
                else hyper.action_scale
            ),
            log_std_min=hyper.log_std_min,
            log_std_max=hyper.log_std_max,
        )

    @property
    def hidden(self) -> Tuple[int, ...]:
        return tuple(self.net.sizes[1:-1])

    def inputs(self, obs: FloatArray, goals: Sequence[int]) -> FloatArray:
        """Network inputs: observations with one-hot goals appended."""
        obs = np.atleast_2d(np.asarray(obs, dtype=np.float64))
        goals = np.asarray(goals, dtype=np.int64).reshape(-1)
        if np.any(goals < 0) or np.any(goals >= self.n):
            raise ParameterError(f"Goals must be in [0, {self.n}), got {goals}")
        if obs.shape != (len(goals), self.obs_dim):
            raise ShapeError(
                f"Expected {len(goals)} x {self.obs_dim} observations, got {obs.shape}"
            )
        return np.concatenate([obs, np.eye(self.n)[goals]], axis=1)

    def _head(
        self, out: FloatArray
    ) -> Tuple[FloatArray, FloatArray, FloatArray]:
        raw_mean = out[:, : self.action_dim]
        raw_log_std = math.log(self.action_scale) + out[:, self.action_dim :]
        log_std = np.clip(raw_log_std, self.log_std_min, self.log_std_max)
        inside = (raw_log_std > self.log_std_min) & (raw_log_std < self.log_std_max)
        return self.action_scale * raw_mean, log_std, inside

    def distribution(
        self, obs: FloatArray, goals: Sequence[int]
    ) -> Tuple[FloatArray, FloatArray]:
        """Mean and log standard deviation of the action distribution.

        Raises:
            NumericalFailureError: If the network output is not finite.
        """
        out, _ = self.net.forward(self.inputs(obs, goals))
        if not np.all(np.isfinite(out)):
            raise NumericalFailureError("Policy network produced non-finite output")
        mean, log_std, _ = self._head(out)
        return mean, log_std

    def log_prob(
        self, obs: FloatArray, goals: Sequence[int], actions: FloatArray
    ) -> FloatArray:
        """Log-density of `actions` (one per row)."""
        mean, log_std = self.distribution(obs, goals)
        return gaussian_log_prob(np.atleast_2d(actions), mean, log_std)

    def act(
        self, state: EnvState, goal: int, rng: np.random.Generator
    ) -> Tuple[FloatArray, float]:
        """Sample an action for `goal` in `state`.

        Returns:
            The action (before the environment clips it) and its log
            density.
        """
        mean, log_std = self.distribution(state.position[np.newaxis, :], [goal])
        noise = rng.standard_normal(self.action_dim)
        action = mean[0] + np.exp(log_std[0]) * noise
        logprob = float(gaussian_log_prob(action[np.newaxis, :], mean, log_std)[0])
        if not (np.all(np.isfinite(action)) and math.isfinite(logprob)):
            raise NumericalFailureError("Policy sampled a non-finite action")
        return action, logprob

    def objective_and_grad(
        self,
        obs: FloatArray,
        goals: Sequence[int],
        actions: FloatArray,
        weights: FloatArray,
    ) -> Tuple[float, Params]:
        """`sum(weights * log_prob(actions))` and its gradient with
        respect to the network parameters."""
        out, inputs = self.net.forward(self.inputs(obs, goals))
        if not np.all(np.isfinite(out)):
            raise NumericalFailureError("Policy network produced non-finite output")
        mean, log_std, inside = self._head(out)
        actions = np.atleast_2d(actions)
        w = np.asarray(weights, dtype=np.float64)[:, np.newaxis]
        objective = float(np.sum(w[:, 0] * gaussian_log_prob(actions, mean, log_std)))
        z = (actions - mean) / np.exp(log_std)
        grad_mean = w * z / np.exp(log_std) * self.action_scale
        grad_log_std = w * (z * z - 1.0) * inside
        grads = self.net.backward(inputs, np.concatenate([grad_mean, grad_log_std], 1))
        return objective, grads


def gaussian_log_prob(
    actions: FloatArray, mean: FloatArray, log_std: FloatArray
) -> FloatArray:
    """Log-density of a diagonal Gaussian, summed over action dimensions."""
    z = (actions - mean) / np.exp(log_std)
    return -0.5 * np.sum(z * z + 2 * log_std + LOG_2PI, axis=-1)


def act(
    policy: PolicySkillSet, state: EnvState, goal: int, rng: np.random.Generator
) -> Tuple[FloatArray, float]:
    """Sample an action (see `PolicySkillSet.act`)."""
    return policy.act(state, goal, rng)


@dataclass(frozen=True)
class Episode:
    """What happened in one scene during one epoch.

    Row `t` holds the observation the action was taken from, the goal,
    the action, the reward for the resulting transition, and the log
    density of the action.
    """

    obs: FloatArray
    goals: FloatArray
    actions: FloatArray
    rewards: FloatArray
    logprobs: FloatArray
    next_obs: Union[FloatArray, None] = None

    def __post_init__(self) -> None:
        lengths = {
            len(self.obs),
            len(self.goals),
            len(self.actions),
            len(self.rewards),
            len(self.logprobs),
        }
        if self.next_obs is not None:
            lengths.add(len(self.next_obs))
        if len(lengths) != 1:
            raise ShapeError(f"Episode arrays have different lengths: {lengths}")
        if not np.all(np.isfinite(self.rewards)):
            raise InvalidInputError("Episode has non-finite rewards")

    def __len__(self) -> int:
        return len(self.rewards)


@dataclass(frozen=True)
class EpisodeBatch:
    """Episodes from all scenes in one epoch (in scene order)."""

    episodes: Tuple[Episode, ...]

    def __len__(self) -> int:
        return sum(len(ep) for ep in self.episodes)

    @property
    def obs(self) -> FloatArray:
        return np.concatenate([ep.obs for ep in self.episodes])

    @property
    def goals(self) -> FloatArray:
        return np.concatenate([ep.goals for ep in self.episodes]).astype(np.int64)

    @property
    def actions(self) -> FloatArray:
        return np.concatenate([ep.actions for ep in self.episodes])

    @property
    def rewards(self) -> FloatArray:
        return np.concatenate([ep.rewards for ep in self.episodes])

    @property
    def next_obs(self) -> FloatArray:
        """Successor observations (if every episode recorded them)."""
        if any(ep.next_obs is None for ep in self.episodes):
            raise ShapeError("Some episodes did not record successor observations")
        return np.concatenate([ep.next_obs for ep in self.episodes])


def discounted_returns(rewards: FloatArray, discount: float) -> FloatArray:
    """Discounted reward-to-go for each step of an episode."""
    returns = np.zeros(len(rewards))
    running = 0.0
    for t in range(len(rewards) - 1, -1, -1):
        running = rewards[t] + discount * running
        returns[t] = running
    return returns


def batch_returns(batch: EpisodeBatch, hyper: PolicyHyper) -> FloatArray:
    """Returns for every step in the batch, whitened if requested."""
    returns = np.concatenate(
        [discounted_returns(ep.rewards, hyper.discount) for ep in batch.episodes]
    )
    if hyper.whiten:
        returns = (returns - returns.mean()) / (returns.std() + 1e-8)
    return returns


def reinforce_update(
    policy: PolicySkillSet, batch: EpisodeBatch, hyper: PolicyHyper
) -> PolicySkillSet:
    """One REINFORCE step on a batch of episodes.

    Returns:
        A new policy; the one passed in is not modified.
    Raises:
        EmptyInputError: If the batch has no steps.
        NumericalFailureError: If the gradient is not finite.
    """
    if len(batch) == 0:
        raise EmptyInputError("Cannot update a policy from an empty batch")
    returns = batch_returns(batch, hyper)
    _, grads = policy.objective_and_grad(
        batch.obs, batch.goals, batch.actions, returns
    )
    params, opt_state = ascend(
        policy.net.params,
        grads,
        policy.opt_state,
        kind=hyper.optimizer,
        learning_rate=hyper.learning_rate,
        max_grad_norm=hyper.max_grad_norm,
    )
    return replace(policy, net=policy.net.with_params(params), opt_state=opt_state)


def save_checkpoint(policy: PolicySkillSet, path: Union[str, PathLike]) -> None:
    """Save a policy (and its optimizer state) to a `.npz` archive.

    The archive holds `format_version`, the architecture (`n`,
    `obs_dim`, `action_dim`, `hidden`, `action_scale`,
    `log_std_bounds`), the layer parameters `param_0`, `param_1`,
    ... in the order (W0, b0, W1, b1, ...), and Adam moments
    `opt_step`, `opt_m_<i>`, `opt_v_<i>`.
    """
    arrays = {
        "format_version": np.array(CHECKPOINT_VERSION),
        "n": np.array(policy.n),
        "obs_dim": np.array(policy.obs_dim),
        "action_dim": np.array(policy.action_dim),
        "hidden": np.array(policy.hidden, dtype=np.int64),
        "action_scale": np.array(policy.action_scale),
        "log_std_bounds": np.array([policy.log_std_min, policy.log_std_max]),
        "opt_step": np.array(policy.opt_state.step),
    }
    for i, p in enumerate(policy.net.params):
        arrays[f"param_{i}"] = p
    for i, (m, v) in enumerate(zip(policy.opt_state.m, policy.opt_state.v)):
        arrays[f"opt_m_{i}"] = m
        arrays[f"opt_v_{i}"] = v
    with open(path, "wb") as outfh:
        np.savez(outfh, **arrays)


def load_checkpoint(path: Union[str, PathLike]) -> PolicySkillSet:
    """Load a policy saved with `save_checkpoint`.

    Raises:
        ShapeError: If the archive has the wrong version or is missing
            something.
    """
    with np.load(path) as data:
        try:
            version = int(data["format_version"])
            if version != CHECKPOINT_VERSION:
                raise ShapeError(f"Unsupported checkpoint version {version}")
            n = int(data["n"])
            obs_dim = int(data["obs_dim"])
            action_dim = int(data["action_dim"])
            hidden = [int(h) for h in data["hidden"]]
            n_params = 2 * (len(hidden) + 1)
            params = [data[f"param_{i}"] for i in range(n_params)]
            log_std_min, log_std_max = (float(x) for x in data["log_std_bounds"])
            step = int(data["opt_step"])
            m: List[FloatArray] = []
            v: List[FloatArray] = []
            if "opt_m_0" in data.files:
                m = [data[f"opt_m_{i}"] for i in range(n_params)]
                v = [data[f"opt_v_{i}"] for i in range(n_params)]
            action_scale = float(data["action_scale"])
        except KeyError as e:
            raise ShapeError(f"Checkpoint {path} is missing {e}") from e
    net = MLP(tuple(params[0::2]), tuple(params[1::2]))
    if net.sizes != [obs_dim + n, *hidden, 2 * action_dim]:
        raise ShapeError(f"Checkpoint {path} has inconsistent layer sizes {net.sizes}")
    LOGGER.debug("Loaded %d-skill policy from %s", n, path)
    return PolicySkillSet(
        n=n,
        obs_dim=obs_dim,
        action_dim=action_dim,
        net=net,
        action_scale=action_scale,
        log_std_min=log_std_min,
        log_std_max=log_std_max,
        opt_state=OptimizerState(step=step, m=tuple(m), v=tuple(v)),
    )
