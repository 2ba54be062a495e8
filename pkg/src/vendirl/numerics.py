"""
Small dense linear algebra and information theory helpers.

The matrices we deal with are tiny (one row per skill, or one row per
observation dimension) so none of this is meant to be fast, just
correct and predictable.
"""

import logging
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
import numpy.typing as npt
from scipy.special import entr

from vendirl.exceptions import (
    EmptyInputError,
    InsufficientSamplesError,
    InvalidInputError,
    NormalizationError,
    NotPositiveDefiniteError,
    NotPositiveSemidefiniteError,
    NumericalFailureError,
    SymmetryError,
)

LOGGER = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]
"""Type alias for arrays of floats."""
ArrayLike = Union[FloatArray, Sequence[float], Sequence[Sequence[float]]]
"""Anything `numpy.asarray` will turn into an array of floats."""

SYMMETRY_TOL = 1e-12
"""Maximum asymmetry (relative to the largest entry) we will accept."""
JACOBI_TOL = 1e-12
"""Convergence threshold on the off-diagonal Frobenius norm."""
JACOBI_MAX_SWEEPS = 100
PSD_TOL = 1e-9
"""Eigenvalues in [-PSD_TOL, 0) are rounding error and become 0."""
JITTER_START = 1e-12
JITTER_MAX = 1e-6
COVARIANCE_DDOF = 1
"""Divisor for sample covariance is T - COVARIANCE_DDOF."""


@dataclass(frozen=True)
class EigenResult:
    """Eigenvalues (descending) and optionally eigenvectors (as columns)."""

    eigenvalues: FloatArray
    eigenvectors: Union[FloatArray, None] = None


def as_symmetric(m: ArrayLike, tol: float = SYMMETRY_TOL) -> FloatArray:
    """Verify that `m` is a finite, square, symmetric matrix.

    Returns:
        A symmetrized copy, so that rounding-level asymmetry does not
        leak into the eigensolver.
    Raises:
        InvalidInputError: Not square, empty or not finite.
        SymmetryError: Asymmetric beyond `tol` (relative to the largest
            entry, or absolute for matrices with entries below 1).
    """
    a = np.array(m, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise InvalidInputError(f"Expected a non-empty square matrix, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError("Matrix has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(a))))
    asym = float(np.max(np.abs(a - a.T)))
    if asym > tol * scale:
        raise SymmetryError(f"Matrix is not symmetric (max |A - A.T| = {asym:g})")
    return (a + a.T) / 2


def sym_eigenvalues(
    m: ArrayLike,
    *,
    vectors: bool = False,
    tol: float = JACOBI_TOL,
    max_sweeps: int = JACOBI_MAX_SWEEPS,
) -> EigenResult:
    """Eigendecomposition of a real symmetric matrix by cyclic Jacobi rotations.

    Args:
        m: Symmetric matrix.
        vectors: Also accumulate the eigenvectors.
        tol: Stop once the off-diagonal Frobenius norm falls below
            `tol` times the Frobenius norm of `m` (or `tol` itself,
            for matrices with norm below 1).
        max_sweeps: Give up after this many sweeps over all pairs.
    Returns:
        `EigenResult` with eigenvalues sorted in descending order.
    Raises:
        SymmetryError: If `m` is not symmetric.
        InvalidInputError: If `m` is not a finite square matrix.
        NumericalFailureError: If the rotations did not converge.
    """
    a = as_symmetric(m)
    n = a.shape[0]
    v = np.eye(n) if vectors else None
    threshold = tol * max(1.0, float(np.linalg.norm(a)))
    sweep = 0
    for sweep in range(max_sweeps):
        off = float(np.sqrt(2.0 * np.sum(np.triu(a, 1) ** 2)))
        if off < threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                colp = a[:, p].copy()
                colq = a[:, q].copy()
                a[:, p] = c * colp - s * colq
                a[:, q] = s * colp + c * colq
                rowp = a[p, :].copy()
                rowq = a[q, :].copy()
                a[p, :] = c * rowp - s * rowq
                a[q, :] = s * rowp + c * rowq
                a[p, q] = a[q, p] = 0.0
                if v is not None:
                    vp = v[:, p].copy()
                    vq = v[:, q].copy()
                    v[:, p] = c * vp - s * vq
                    v[:, q] = s * vp + c * vq
    else:
        off = float(np.sqrt(2.0 * np.sum(np.triu(a, 1) ** 2)))
        if off >= threshold:
            raise NumericalFailureError(
                f"Jacobi rotations did not converge in {max_sweeps} sweeps"
                f" (off-diagonal norm {off:g})"
            )
    if sweep > max_sweeps // 2:
        LOGGER.debug("Jacobi took %d sweeps for a %dx%d matrix", sweep, n, n)
    eigenvalues = np.diagonal(a).copy()
    order = np.argsort(-eigenvalues, kind="stable")
    return EigenResult(
        eigenvalues=eigenvalues[order],
        eigenvectors=None if v is None else v[:, order],
    )


def clamp_psd_eigenvalues(
    eigenvalues: ArrayLike, tol: float = PSD_TOL, clamp_negative: bool = False
) -> FloatArray:
    """Remove rounding-level negative eigenvalues.

    Args:
        eigenvalues: Eigenvalues of a (supposedly) PSD matrix.
        tol: Eigenvalues in `[-tol, 0)` are set to zero.
        clamp_negative: Also zero out more negative eigenvalues, then
            rescale so the sum (i.e. the trace) is preserved.
    Raises:
        NotPositiveSemidefiniteError: If an eigenvalue is below `-tol`
            and `clamp_negative` is false.
    """
    lam = np.array(eigenvalues, dtype=np.float64)
    low = float(lam.min()) if lam.size else 0.0
    if low < -tol:
        if not clamp_negative:
            raise NotPositiveSemidefiniteError(
                f"Matrix is not positive semidefinite (eigenvalue {low:g})"
            )
        total = float(lam.sum())
        lam[lam < 0] = 0.0
        clamped = float(lam.sum())
        if clamped > 0:
            lam *= total / clamped
        LOGGER.warning(
            "Clamped negative eigenvalues of a non-PSD kernel (min %g)", low
        )
        return lam
    lam[lam < 0] = 0.0
    return lam


def shannon_entropy(p: ArrayLike) -> float:
    """Shannon entropy (in nats) of a probability vector.

    Entries within `PSD_TOL` below zero are treated as zero and the
    vector is renormalized, with the usual convention that 0 log 0 = 0.

    Raises:
        EmptyInputError: If `p` is empty.
        InvalidInputError: If `p` has non-finite or clearly negative entries.
        NormalizationError: If `p` does not sum to 1 (within 1e-6).
    """
    q = np.array(p, dtype=np.float64).ravel()
    if q.size == 0:
        raise EmptyInputError("Cannot compute the entropy of an empty vector")
    if not np.all(np.isfinite(q)):
        raise InvalidInputError("Probability vector has non-finite entries")
    if np.any(q < -PSD_TOL):
        raise InvalidInputError(f"Probability vector has negative entries: {q}")
    q[q < 0] = 0.0
    total = float(q.sum())
    if abs(total - 1.0) > 1e-6:
        raise NormalizationError(f"Probability vector sums to {total:g}, not 1")
    q /= total
    return float(np.sum(entr(q)))


def cholesky_logdet(
    m: ArrayLike, jitter: float = JITTER_START, max_jitter: float = JITTER_MAX
) -> float:
    """Log-determinant of a symmetric positive definite matrix.

    If the Cholesky decomposition fails we add increasing amounts of
    jitter to the diagonal (by factors of 10, starting from `jitter`)
    before giving up.

    Returns:
        `2 * sum(log(diag(L)))` where `m (+ jitter * I) = L L^T`.
    Raises:
        NotPositiveDefiniteError: If even `max_jitter` does not help.
    """
    a = as_symmetric(m)
    try:
        chol = np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        chol = None
        eye = np.eye(a.shape[0])
        eps = jitter
        while eps <= max_jitter * (1 + 1e-9):
            try:
                chol = np.linalg.cholesky(a + eps * eye)
                LOGGER.debug("Cholesky needed jitter %g", eps)
                break
            except np.linalg.LinAlgError:
                eps *= 10
        if chol is None:
            raise NotPositiveDefiniteError(
                f"Matrix is not positive definite even with jitter {max_jitter:g}"
            )
    return 2.0 * float(np.sum(np.log(np.diagonal(chol))))


def _as_trajectory(t: ArrayLike) -> FloatArray:
    traj = np.array(t, dtype=np.float64)
    if traj.ndim == 1:
        traj = traj[:, np.newaxis]
    if traj.ndim != 2:
        raise InvalidInputError(f"Trajectory must be T x D, got shape {traj.shape}")
    if traj.shape[0] == 0:
        raise EmptyInputError("Trajectory has no observations")
    if not np.all(np.isfinite(traj)):
        raise InvalidInputError("Trajectory has non-finite observations")
    return traj


def trajectory_mean(t: ArrayLike) -> FloatArray:
    """Mean of a T x D trajectory over time.

    Raises:
        EmptyInputError: If the trajectory has no observations.
    """
    return _as_trajectory(t).mean(axis=0)


def trajectory_covariance(t: ArrayLike, ddof: int = COVARIANCE_DDOF) -> FloatArray:
    """Sample covariance (D x D) of a T x D trajectory.

    Raises:
        InsufficientSamplesError: If there are fewer than 2 observations.
    """
    traj = _as_trajectory(t)
    if traj.shape[0] < 2:
        raise InsufficientSamplesError(
            f"Need at least 2 observations for a covariance, got {traj.shape[0]}"
        )
    centered = traj - traj.mean(axis=0)
    cov = centered.T @ centered / (traj.shape[0] - ddof)
    return (cov + cov.T) / 2
