"""
Similarity between skills based on the volume of their covariance.
"""

import math

from vendirl.kernels.registry import kernel
from vendirl.kernels.spec import SimilaritySpec, SkillSample
from vendirl.numerics import cholesky_logdet, trajectory_covariance


def covariance_determinant(sample: SkillSample) -> float:
    """Determinant of the sample covariance of all observations in a
    sample (via its Cholesky log-determinant)."""
    return math.exp(cholesky_logdet(trajectory_covariance(sample.pooled)))


def covariance_similarity(a: SkillSample, b: SkillSample) -> float:
    """Similarity in covariance structure, `exp(-|det(S_a) - det(S_b)|)`.

    Note that two skills which both move in straight lines have
    (nearly) zero covariance determinants, so this cannot tell them
    apart, whatever direction they go in.
    """
    return math.exp(-abs(covariance_determinant(a) - covariance_determinant(b)))


@kernel(name="covariance_structure")
def covariance_structure(
    a: SkillSample, b: SkillSample, spec: SimilaritySpec
) -> float:
    return covariance_similarity(a, b)
