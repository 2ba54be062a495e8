"""
Overlap between skills, estimated with k-nearest-neighbour manifolds.

Each skill's support in observation space is approximated by the
union of hyperspheres around its observations, each with a radius
equal to the distance to the `k`th nearest neighbour.  Precision is
the fraction of the second skill's observations which fall inside the
first skill's manifold, recall is the converse, and the overlap is
their harmonic mean (F1).
"""

from typing import Tuple

import numpy as np
from scipy.spatial.distance import cdist

from vendirl.exceptions import ParameterError
from vendirl.kernels.registry import kernel
from vendirl.kernels.spec import SimilaritySpec, SkillSample
from vendirl.numerics import FloatArray


def knn_radii(points: FloatArray, knn_k: int) -> FloatArray:
    """Distance from each point to its `knn_k`th nearest neighbour
    (not counting itself) in the same set."""
    if knn_k < 1 or knn_k >= len(points):
        raise ParameterError(
            f"knn_k must be between 1 and {len(points) - 1} for"
            f" {len(points)} points, got {knn_k}"
        )
    distances = np.sort(cdist(points, points), axis=1)
    # Column 0 is the point itself
    return distances[:, knn_k]


def manifold_membership(
    queries: FloatArray, points: FloatArray, radii: FloatArray
) -> FloatArray:
    """Whether each query lies within at least one point's hypersphere."""
    return np.any(cdist(queries, points) <= radii[np.newaxis, :], axis=1)


def manifold_precision_recall(
    a: SkillSample, b: SkillSample, knn_k: int
) -> Tuple[float, float]:
    """Precision and recall of skill `b` with respect to skill `a`.

    Returns:
        Precision (fraction of `b` inside the manifold of `a`) and
        recall (fraction of `a` inside the manifold of `b`).
    Raises:
        ParameterError: If `knn_k` is not smaller than the number of
            observations in either sample.
    """
    xa = a.pooled
    xb = b.pooled
    radii_a = knn_radii(xa, knn_k)
    radii_b = knn_radii(xb, knn_k)
    precision = float(np.mean(manifold_membership(xb, xa, radii_a)))
    recall = float(np.mean(manifold_membership(xa, xb, radii_b)))
    return precision, recall


def knn_f1_similarity(a: SkillSample, b: SkillSample, knn_k: int = 3) -> float:
    """Overlap of two skills as the F1 score of manifold precision and
    recall.  No overlap at all gives 0."""
    precision, recall = manifold_precision_recall(a, b, knn_k)
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


@kernel(name="knn_f1_overlap")
def knn_f1_overlap(a: SkillSample, b: SkillSample, spec: SimilaritySpec) -> float:
    return knn_f1_similarity(a, b, spec.knn_k)
