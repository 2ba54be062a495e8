"""
Declarative description of skill similarity, and skill samples.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence, Tuple, Union

import numpy as np

from vendirl.exceptions import EmptyInputError, InvalidInputError, ParameterError
from vendirl.numerics import ArrayLike, FloatArray


class MeanReference(Enum):
    """Where trajectory means are measured from."""

    RAW = "raw"
    """Raw observation coordinates."""
    RELATIVE_TO_START = "relative_to_start"
    """Coordinates relative to the first observation of each trajectory."""


Term = Tuple[str, float]
"""A similarity function name and its weight."""


def parse_terms(text: str) -> Tuple[Term, ...]:
    """Parse terms written as `kind:weight, kind:weight`.

    A bare `kind` gets weight 1.
    """
    terms = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        kind, sep, weight = item.partition(":")
        try:
            terms.append((kind.strip(), float(weight) if sep else 1.0))
        except ValueError as e:
            raise ParameterError(f"Bad weight in similarity term {item!r}") from e
    return tuple(terms)


def format_terms(terms: Iterable[Term]) -> str:
    """Inverse of `parse_terms`."""
    return ", ".join(f"{kind}:{weight!r}" for kind, weight in terms)


@dataclass(frozen=True)
class SimilaritySpec:
    """Similarity function between skills, as a convex combination of
    registered base kernels.

    Attributes:
        terms: Pairs of (kernel name, weight), weights summing to 1.
        knn_k: Neighbourhood size for `knn_f1_overlap`.
        rollouts_per_skill: Number of trajectories collected per skill
            when building a kernel matrix from fresh rollouts.
        mean_reference: Where `cosine_of_means` and `mmd_linear`
            measure trajectory means from.
        rescale_cosine: Map cosine similarity from [-1, 1] to [0, 1].
        clamp_negative: Clamp negative eigenvalues of the resulting
            kernel matrix instead of raising an error.
    """

    terms: Tuple[Term, ...] = (("mmd_linear", 1.0),)
    knn_k: int = 3
    rollouts_per_skill: int = 1
    mean_reference: MeanReference = MeanReference.RELATIVE_TO_START
    rescale_cosine: bool = True
    clamp_negative: bool = False

    def __post_init__(self) -> None:
        from vendirl.kernels.registry import lookup

        terms = tuple((str(kind), float(weight)) for kind, weight in self.terms)
        object.__setattr__(self, "terms", terms)
        if not terms:
            raise ParameterError("Similarity needs at least one term")
        for kind, weight in terms:
            if lookup(kind) is None:
                raise ParameterError(f"Unknown similarity kernel {kind!r}")
            if not weight >= 0:
                raise ParameterError(f"Negative weight {weight} for {kind!r}")
        total = sum(weight for _, weight in terms)
        if abs(total - 1.0) > 1e-9:
            raise ParameterError(f"Similarity weights sum to {total}, not 1")
        if self.knn_k < 1:
            raise ParameterError(f"knn_k must be positive, got {self.knn_k}")
        if self.rollouts_per_skill < 1:
            raise ParameterError(
                f"rollouts_per_skill must be positive, got {self.rollouts_per_skill}"
            )

    @property
    def kinds(self) -> Tuple[str, ...]:
        return tuple(kind for kind, _ in self.terms)

    @classmethod
    def single(cls, kind: str, **kwargs) -> "SimilaritySpec":
        """Similarity consisting of just one base kernel."""
        return cls(terms=((kind, 1.0),), **kwargs)


@dataclass(frozen=True)
class SkillSample:
    """A few trajectories (each `T x D`) drawn from one skill.

    Trajectories must all have the same observation dimension, but
    not necessarily the same length.
    """

    trajectories: Tuple[FloatArray, ...] = field()

    def __post_init__(self) -> None:
        trajs = []
        for t in self.trajectories:
            traj = np.array(t, dtype=np.float64)
            if traj.ndim != 2:
                raise InvalidInputError(
                    f"Trajectory must be T x D, got shape {traj.shape}"
                )
            if traj.shape[0] == 0:
                raise EmptyInputError("Trajectory has no observations")
            traj.flags.writeable = False
            trajs.append(traj)
        if not trajs:
            raise EmptyInputError("Skill sample has no trajectories")
        if len({t.shape[1] for t in trajs}) != 1:
            raise InvalidInputError("Trajectories have different dimensions")
        object.__setattr__(self, "trajectories", tuple(trajs))

    @classmethod
    def of(cls, *trajectories: Union[ArrayLike, FloatArray]) -> "SkillSample":
        return cls(tuple(np.asarray(t, dtype=np.float64) for t in trajectories))

    @classmethod
    def from_sequence(
        cls, trajectories: Sequence[Union[ArrayLike, FloatArray]]
    ) -> "SkillSample":
        return cls.of(*trajectories)

    @property
    def dim(self) -> int:
        return self.trajectories[0].shape[1]

    @property
    def n_rollouts(self) -> int:
        return len(self.trajectories)

    @property
    def pooled(self) -> FloatArray:
        """All observations concatenated into one `NT x D` array."""
        return np.concatenate(self.trajectories, axis=0)

    def referenced(self, reference: MeanReference) -> FloatArray:
        """Pooled observations, relative to `reference`."""
        if reference is MeanReference.RAW:
            return self.pooled
        return np.concatenate([t - t[0] for t in self.trajectories], axis=0)
