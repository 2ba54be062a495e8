"""
Similarity between skills based on their mean observations.
"""

import numpy as np

from vendirl.exceptions import DegenerateMeanError
from vendirl.kernels.registry import kernel
from vendirl.kernels.spec import MeanReference, SimilaritySpec, SkillSample
from vendirl.numerics import FloatArray, trajectory_mean

# Below this a mean has no meaningful direction
DEGENERATE_NORM = 1e-12


def skill_mean(
    sample: SkillSample, reference: MeanReference = MeanReference.RELATIVE_TO_START
) -> FloatArray:
    """Mean observation over all trajectories in a sample."""
    return trajectory_mean(sample.referenced(reference))


def cosine_similarity(
    a: SkillSample,
    b: SkillSample,
    *,
    reference: MeanReference = MeanReference.RELATIVE_TO_START,
    rescale: bool = False,
) -> float:
    """Cosine of the angle between the mean observations of two skills.

    Args:
        a: Sample from the first skill.
        b: Sample from the second skill.
        reference: Where to measure the means from.
        rescale: Map the result from [-1, 1] to [0, 1].
    Returns:
        1 if the means point the same way, -1 if they point in
        opposite directions (0 and 1 respectively when rescaled).
    Raises:
        DegenerateMeanError: If either mean is zero.
    """
    mu_a = skill_mean(a, reference)
    mu_b = skill_mean(b, reference)
    norm_a = float(np.linalg.norm(mu_a))
    norm_b = float(np.linalg.norm(mu_b))
    if norm_a < DEGENERATE_NORM or norm_b < DEGENERATE_NORM:
        raise DegenerateMeanError(
            "Cannot compute cosine similarity of a zero mean"
            f" (norms {norm_a:g}, {norm_b:g})"
        )
    cos = float(np.dot(mu_a, mu_b)) / (norm_a * norm_b)
    cos = min(1.0, max(-1.0, cos))
    return (1.0 + cos) / 2 if rescale else cos


def mmd_linear_similarity(
    a: SkillSample,
    b: SkillSample,
    *,
    reference: MeanReference = MeanReference.RELATIVE_TO_START,
) -> float:
    """Similarity from maximum mean discrepancy with a linear kernel.

    With a linear kernel the MMD is just the distance between the
    means, which we turn into a similarity with `exp(-d)`.
    """
    mu_a = skill_mean(a, reference)
    mu_b = skill_mean(b, reference)
    return float(np.exp(-np.linalg.norm(mu_a - mu_b)))


@kernel(name="cosine_of_means")
def cosine_of_means(a: SkillSample, b: SkillSample, spec: SimilaritySpec) -> float:
    return cosine_similarity(
        a, b, reference=spec.mean_reference, rescale=spec.rescale_cosine
    )


@kernel(name="mmd_linear")
def mmd_linear(a: SkillSample, b: SkillSample, spec: SimilaritySpec) -> float:
    return mmd_linear_similarity(a, b, reference=spec.mean_reference)
