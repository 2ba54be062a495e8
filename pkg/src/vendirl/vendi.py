"""
The Vendi Score, and rewards derived from it.

The Vendi Score of `n` things with similarity (kernel) matrix `K` is
the exponential of the Shannon entropy of the eigenvalues of `K / n`.
It is an "effective number" of distinct things: `n` if they are all
completely dissimilar, and 1 if they are all identical.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Sequence

import numpy as np

from vendirl.exceptions import InvalidInputError
from vendirl.numerics import (
    ArrayLike,
    FloatArray,
    as_symmetric,
    clamp_psd_eigenvalues,
    shannon_entropy,
    sym_eigenvalues,
)

if TYPE_CHECKING:
    from vendirl.kernels.spec import SimilaritySpec, SkillSample


@dataclass(frozen=True)
class KernelMatrix:
    """Pairwise similarities between `n` skills.

    This is symmetric and has ones on the diagonal (every skill is
    completely similar to itself).  It should also be positive
    semidefinite, but that is only checked when you compute its score.
    """

    sim: FloatArray

    def __post_init__(self) -> None:
        sim = as_symmetric(self.sim)
        if not np.all(np.diagonal(sim) == 1.0):
            raise InvalidInputError(
                f"Kernel matrix diagonal must be exactly 1, got {np.diagonal(sim)}"
            )
        sim.flags.writeable = False
        object.__setattr__(self, "sim", sim)

    @property
    def n(self) -> int:
        return self.sim.shape[0]

    @classmethod
    def from_array(cls, sim: ArrayLike) -> "KernelMatrix":
        return cls(np.array(sim, dtype=np.float64))

    @classmethod
    def identity(cls, n: int) -> "KernelMatrix":
        """Kernel for `n` completely dissimilar skills."""
        return cls(np.eye(n))

    @classmethod
    def ones(cls, n: int) -> "KernelMatrix":
        """Kernel for `n` identical skills."""
        return cls(np.ones((n, n)))

    def with_row(self, index: int, row: ArrayLike) -> "KernelMatrix":
        """Copy of this matrix with row and column `index` replaced.

        The diagonal entry stays at 1 whatever `row[index]` says.
        """
        sim = self.sim.copy()
        values = np.array(row, dtype=np.float64)
        sim[index, :] = values
        sim[:, index] = values
        sim[index, index] = 1.0
        return KernelMatrix(sim)


class RewardTransform(Enum):
    """How the Vendi Score is turned into a per-step reward."""

    RAW = "raw"
    """The score itself, in [1, n]."""
    TIME_DERIVATIVE = "time_derivative"
    """Change in score caused by the current step."""
    PENALTY = "penalty"
    """Score minus `n`, in [1 - n, 0]."""
    LOG_FRACTION = "log_fraction"
    """log(score / n), in [log(1/n), 0]."""


def vendi_score(km: KernelMatrix, *, clamp_negative: bool = False) -> float:
    """Vendi Score of a kernel matrix.

    Args:
        km: Kernel matrix with unit diagonal.
        clamp_negative: Tolerate a kernel that is not positive
            semidefinite, by clamping its negative eigenvalues to zero
            and renormalizing (only sensible for evaluation kernels
            like the kNN F1 overlap).
    Returns:
        The score, clamped to `[1, n]` to absorb rounding error.
    Raises:
        NotPositiveSemidefiniteError: If the kernel has significantly
            negative eigenvalues and `clamp_negative` is false.
    """
    n = km.n
    lam = sym_eigenvalues(km.sim / n).eigenvalues
    lam = clamp_psd_eigenvalues(lam, clamp_negative=clamp_negative)
    score = math.exp(shannon_entropy(lam))
    return min(float(n), max(1.0, score))


def transform_score(
    vs_after: float, vs_before: float, transform: RewardTransform, n: int
) -> float:
    """Turn a Vendi Score (already computed) into a reward."""
    if transform is RewardTransform.RAW:
        return vs_after
    elif transform is RewardTransform.TIME_DERIVATIVE:
        return vs_after - vs_before
    elif transform is RewardTransform.PENALTY:
        return vs_after - n
    elif transform is RewardTransform.LOG_FRACTION:
        # Scores are clamped to [1, n] so this is in [log(1/n), 0]
        return min(0.0, math.log(vs_after / n))
    raise ValueError(f"Unknown reward transform {transform!r}")


def vendirl_reward(
    km_after_step: KernelMatrix,
    vs_before_step: float,
    transform: RewardTransform,
    n: int,
    *,
    clamp_negative: bool = False,
) -> float:
    """Reward for a transition, given the kernel after the transition.

    Args:
        km_after_step: Kernel matrix updated for the current skill at
            time `t + 1`.
        vs_before_step: Vendi Score at time `t` (only used by
            `RewardTransform.TIME_DERIVATIVE`).
        transform: Reward transform.
        n: Number of skills.
    """
    vs = vendi_score(km_after_step, clamp_negative=clamp_negative)
    return transform_score(vs, vs_before_step, transform, n)


def effective_unique_skills(
    samples: Sequence["SkillSample"], spec: "SimilaritySpec"
) -> float:
    """Effective number of unique skills.

    This is the Vendi Score of the kernel matrix built from `samples`
    (one per skill) using the similarity function described by `spec`.
    """
    from vendirl.kernels import build_kernel_matrix

    return vendi_score(
        build_kernel_matrix(samples, spec), clamp_negative=spec.clamp_negative
    )
