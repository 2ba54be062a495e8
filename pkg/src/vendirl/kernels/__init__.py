"""
Pluggable similarity functions between skills.

Skills are compared through the observation trajectories they
induce.  Base kernels are registered by name (see `kernel` to add your
own) and combined linearly according to a `SimilaritySpec`.
"""

from typing import Sequence

import numpy as np

from vendirl.exceptions import EmptyInputError
from vendirl.kernels.covariance import covariance_determinant, covariance_similarity
from vendirl.kernels.knn import knn_f1_similarity, manifold_precision_recall
from vendirl.kernels.means import cosine_similarity, mmd_linear_similarity
from vendirl.kernels.registry import kernel, lookup, names
from vendirl.kernels.spec import (
    MeanReference,
    SimilaritySpec,
    SkillSample,
    format_terms,
    parse_terms,
)
from vendirl.numerics import FloatArray
from vendirl.vendi import KernelMatrix

__all__ = [
    "MeanReference",
    "SimilaritySpec",
    "SkillSample",
    "build_kernel_matrix",
    "combined_similarity",
    "cosine_similarity",
    "covariance_determinant",
    "covariance_similarity",
    "format_terms",
    "kernel",
    "kernel_row",
    "knn_f1_similarity",
    "lookup",
    "manifold_precision_recall",
    "mmd_linear_similarity",
    "names",
    "parse_terms",
]


def combined_similarity(spec: SimilaritySpec, a: SkillSample, b: SkillSample) -> float:
    """Weighted sum of the base kernels in `spec`.

    Terms with zero weight are not evaluated at all.
    """
    total = 0.0
    for kind, weight in spec.terms:
        if weight == 0:
            continue
        func = lookup(kind)
        assert func is not None  # checked by SimilaritySpec
        total += weight * func(a, b, spec)
    return total


def kernel_row(
    samples: Sequence[SkillSample], index: int, spec: SimilaritySpec
) -> FloatArray:
    """Similarities between skill `index` and every skill.

    The entry for `index` itself is 1 and is not evaluated.
    """
    row = np.ones(len(samples))
    for j in range(len(samples)):
        if j != index:
            # Same argument order as build_kernel_matrix
            lo, hi = min(index, j), max(index, j)
            row[j] = combined_similarity(spec, samples[lo], samples[hi])
    return row


def build_kernel_matrix(
    samples: Sequence[SkillSample], spec: SimilaritySpec
) -> KernelMatrix:
    """Kernel matrix between `n` skills, given one sample per skill.

    Off-diagonal entries are evaluated once per unordered pair (in a
    fixed order), the diagonal is set to 1.
    """
    n = len(samples)
    if n == 0:
        raise EmptyInputError("Need at least one skill to build a kernel matrix")
    sim = np.eye(n)
    for i in range(n):
        for j in range(i + 1, n):
            sim[i, j] = sim[j, i] = combined_similarity(spec, samples[i], samples[j])
    return KernelMatrix(sim)
