"""
Tiny multi-layer perceptrons with hand-written backpropagation.

Networks here have a few hundred to a few thousand parameters and are
evaluated on batches of a few hundred observations, which numpy does
perfectly well on its own.
"""

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import List, Sequence, Tuple

import numpy as np

from vendirl.exceptions import NumericalFailureError, ShapeError
from vendirl.numerics import FloatArray

Params = Tuple[FloatArray, ...]
"""Network parameters as (W0, b0, W1, b1, ...)."""


@dataclass(frozen=True)
class MLP:
    """Fully connected network, tanh hidden layers and a linear output.

    Weights are stored as `(fan_in, fan_out)` so a batch of inputs `x`
    goes through a layer as `x @ W + b`.
    """

    weights: Tuple[FloatArray, ...]
    biases: Tuple[FloatArray, ...]

    def __post_init__(self) -> None:
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ShapeError("Need one bias per weight matrix, and at least one layer")
        for w, b in zip(self.weights, self.biases):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise ShapeError(f"Bad layer shapes {w.shape} and {b.shape}")
        for w_in, w_out in zip(self.weights, self.weights[1:]):
            if w_in.shape[1] != w_out.shape[0]:
                raise ShapeError(f"Layers do not connect: {w_in.shape} {w_out.shape}")

    @classmethod
    def init(
        cls,
        sizes: Sequence[int],
        rng: np.random.Generator,
        *,
        zero_last: bool = True,
    ) -> "MLP":
        """Initialize with weights uniform in `+/- 1/sqrt(fan_in)` and
        zero biases (and optionally an all-zero output layer)."""
        weights = []
        biases = []
        for i, (fan_in, fan_out) in enumerate(zip(sizes, sizes[1:])):
            if zero_last and i == len(sizes) - 2:
                w = np.zeros((fan_in, fan_out))
            else:
                bound = 1.0 / np.sqrt(fan_in)
                w = rng.uniform(-bound, bound, size=(fan_in, fan_out))
            weights.append(w)
            biases.append(np.zeros(fan_out))
        return cls(tuple(weights), tuple(biases))

    @property
    def sizes(self) -> List[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    @property
    def params(self) -> Params:
        return tuple(p for layer in zip(self.weights, self.biases) for p in layer)

    def with_params(self, params: Sequence[FloatArray]) -> "MLP":
        params = [np.array(p, dtype=np.float64) for p in params]
        return replace(self, weights=tuple(params[0::2]), biases=tuple(params[1::2]))

    def flat(self) -> FloatArray:
        return np.concatenate([p.ravel() for p in self.params])

    def with_flat(self, flat: FloatArray) -> "MLP":
        flat = np.asarray(flat).reshape(-1)
        size = sum(p.size for p in self.params)
        if len(flat) != size:
            raise ShapeError(f"Expected {size} parameters, got {len(flat)}")
        params = []
        pos = 0
        for p in self.params:
            params.append(flat[pos : pos + p.size].reshape(p.shape))
            pos += p.size
        return self.with_params(params)

    def forward(self, x: FloatArray) -> Tuple[FloatArray, List[FloatArray]]:
        """Evaluate on a batch.

        Returns:
            The outputs, and the inputs to each layer (for `backward`).
        """
        h = np.atleast_2d(np.asarray(x, dtype=np.float64))
        inputs = []
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            inputs.append(h)
            z = h @ w + b
            h = z if i == last else np.tanh(z)
        return h, inputs

    def backward(self, inputs: List[FloatArray], grad_out: FloatArray) -> Params:
        """Backpropagate the gradient of some scalar with respect to the
        outputs into gradients with respect to the parameters."""
        grads: List[FloatArray] = []
        g = grad_out
        for i in range(len(self.weights) - 1, -1, -1):
            h = inputs[i]
            grads.append(g.sum(axis=0))
            grads.append(h.T @ g)
            if i > 0:
                # h is tanh of the previous layer
                g = (g @ self.weights[i].T) * (1.0 - h * h)
        return tuple(reversed(grads))


class OptimizerKind(Enum):
    ADAM = "adam"
    SGD = "sgd"


@dataclass(frozen=True)
class OptimizerState:
    """Adam moment estimates (empty until the first step)."""

    step: int = 0
    m: Params = field(default_factory=tuple)
    v: Params = field(default_factory=tuple)


ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


def global_norm(grads: Sequence[FloatArray]) -> float:
    return float(np.sqrt(sum(float(np.sum(g * g)) for g in grads)))


def ascend(
    params: Params,
    grads: Params,
    state: OptimizerState,
    *,
    kind: OptimizerKind = OptimizerKind.ADAM,
    learning_rate: float = 3e-4,
    max_grad_norm: float = 5.0,
) -> Tuple[Params, OptimizerState]:
    """Take one gradient *ascent* step (negate `grads` to descend).

    Gradients are first clipped to a global norm of `max_grad_norm`
    (if positive).  An all-zero gradient changes nothing, the
    optimizer state included.

    Raises:
        NumericalFailureError: If any gradient is not finite.  Nothing
            is changed in this case.
    """
    if not all(np.all(np.isfinite(g)) for g in grads):
        raise NumericalFailureError("Non-finite gradient, refusing to update")
    norm = global_norm(grads)
    if norm == 0.0:
        return tuple(params), state
    if max_grad_norm > 0 and norm > max_grad_norm:
        grads = tuple(g * (max_grad_norm / norm) for g in grads)
    if kind is OptimizerKind.SGD:
        return (
            tuple(p + learning_rate * g for p, g in zip(params, grads)),
            replace(state, step=state.step + 1),
        )
    step = state.step + 1
    m = state.m or tuple(np.zeros_like(p) for p in params)
    v = state.v or tuple(np.zeros_like(p) for p in params)
    m = tuple(ADAM_BETA1 * mi + (1 - ADAM_BETA1) * g for mi, g in zip(m, grads))
    v = tuple(ADAM_BETA2 * vi + (1 - ADAM_BETA2) * g * g for vi, g in zip(v, grads))
    mhat_scale = 1.0 / (1 - ADAM_BETA1**step)
    vhat_scale = 1.0 / (1 - ADAM_BETA2**step)
    new_params = tuple(
        p + learning_rate * (mi * mhat_scale) / (np.sqrt(vi * vhat_scale) + ADAM_EPS)
        for p, mi, vi in zip(params, m, v)
    )
    return new_params, OptimizerState(step=step, m=m, v=v)
