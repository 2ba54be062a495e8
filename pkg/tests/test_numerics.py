import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

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
from vendirl.numerics import (
    cholesky_logdet,
    clamp_psd_eigenvalues,
    shannon_entropy,
    sym_eigenvalues,
    trajectory_covariance,
    trajectory_mean,
)


def cofactor_det(m: np.ndarray) -> float:
    """Determinant by Laplace expansion along the first row."""
    n = m.shape[0]
    if n == 1:
        return float(m[0, 0])
    total = 0.0
    for j in range(n):
        minor = np.delete(np.delete(m, 0, axis=0), j, axis=1)
        total += (-1) ** j * m[0, j] * cofactor_det(minor)
    return total


def random_spd(rng: np.random.Generator, dim: int) -> np.ndarray:
    a = rng.normal(size=(dim, dim))
    return a @ a.T + dim * np.eye(dim)


def test_eigenvalues_simple() -> None:
    np.testing.assert_allclose(sym_eigenvalues(np.eye(3)).eigenvalues, [1, 1, 1])
    np.testing.assert_allclose(
        sym_eigenvalues([[2, 1], [1, 2]]).eigenvalues, [3, 1], atol=1e-12
    )
    np.testing.assert_allclose(
        sym_eigenvalues(np.ones((4, 4))).eigenvalues, [4, 0, 0, 0], atol=1e-12
    )
    np.testing.assert_allclose(sym_eigenvalues([[5.0]]).eigenvalues, [5.0])


def test_eigenvalues_errors() -> None:
    with pytest.raises(SymmetryError):
        sym_eigenvalues([[1, 2], [0, 1]])
    with pytest.raises(InvalidInputError):
        sym_eigenvalues([[1, np.nan], [np.nan, 1]])
    with pytest.raises(InvalidInputError):
        sym_eigenvalues([[1, 2, 3]])
    with pytest.raises(InvalidInputError):
        sym_eigenvalues(np.zeros((0, 0)))
    # Also catchable as plain ValueError
    with pytest.raises(ValueError):
        sym_eigenvalues([[1, 2], [0, 1]])


def test_sweep_cap() -> None:
    with pytest.raises(NumericalFailureError):
        sym_eigenvalues([[2, 1], [1, 2]], max_sweeps=0)
    # Already diagonal, nothing to do
    np.testing.assert_allclose(
        sym_eigenvalues(np.diag([1.0, 3.0]), max_sweeps=0).eigenvalues, [3, 1]
    )


def test_eigenvectors_reconstruct() -> None:
    rng = np.random.default_rng(42)
    for dim in (2, 5, 9):
        a = rng.normal(size=(dim, dim))
        a = a + a.T
        result = sym_eigenvalues(a, vectors=True)
        assert result.eigenvectors is not None
        q = result.eigenvectors
        np.testing.assert_allclose(q.T @ q, np.eye(dim), atol=1e-10)
        recon = q @ np.diag(result.eigenvalues) @ q.T
        assert np.max(np.abs(recon - a)) <= 1e-8
        np.testing.assert_allclose(
            result.eigenvalues, np.linalg.eigvalsh(a)[::-1], atol=1e-9
        )


@settings(max_examples=50, deadline=None)
@given(dim=st.integers(1, 16), seed=st.integers(0, 2**32 - 1))
def test_eigenvalues_trace(dim: int, seed: int) -> None:
    rng = np.random.default_rng(seed)
    a = rng.uniform(-1, 1, size=(dim, dim))
    a = a + a.T
    lam = sym_eigenvalues(a).eigenvalues
    assert abs(lam.sum() - np.trace(a)) <= 1e-9 * dim
    assert np.all(np.diff(lam) <= 0)


@settings(max_examples=50, deadline=None)
@given(dim=st.integers(1, 12), seed=st.integers(0, 2**32 - 1))
def test_gram_eigenvalues_nonnegative(dim: int, seed: int) -> None:
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(3, dim))
    lam = sym_eigenvalues(g.T @ g).eigenvalues
    assert lam.min() >= -1e-9


def test_clamp_psd() -> None:
    np.testing.assert_array_equal(
        clamp_psd_eigenvalues([0.6, 0.4, -1e-12]), [0.6, 0.4, 0.0]
    )
    with pytest.raises(NotPositiveSemidefiniteError):
        clamp_psd_eigenvalues([1.1, -0.1])
    lam = clamp_psd_eigenvalues([1.2, 0.0, -0.2], clamp_negative=True)
    assert lam.min() == 0.0
    assert lam.sum() == pytest.approx(1.0)


def test_entropy() -> None:
    assert shannon_entropy([1, 0, 0]) == 0.0
    assert shannon_entropy([0.5, 0.5]) == pytest.approx(math.log(2), abs=1e-12)
    assert shannon_entropy([0.25] * 4) == pytest.approx(math.log(4), abs=1e-12)
    # Rounding-level negatives are zero
    assert shannon_entropy([1.0 + 1e-10, -1e-10]) == pytest.approx(0.0, abs=1e-9)


def test_entropy_errors() -> None:
    with pytest.raises(NormalizationError):
        shannon_entropy([0.5, 0.4])
    with pytest.raises(InvalidInputError):
        shannon_entropy([1.5, -0.5])
    with pytest.raises(EmptyInputError):
        shannon_entropy([])


@settings(max_examples=100)
@given(
    st.lists(st.floats(0.0, 1.0, allow_nan=False), min_size=1, max_size=20).filter(
        lambda xs: sum(xs) > 1e-3
    )
)
def test_entropy_bounded(weights: list) -> None:
    p = np.array(weights) / sum(weights)
    h = shannon_entropy(p)
    assert -1e-12 <= h <= math.log(len(p)) + 1e-9
    if np.allclose(p, 1 / len(p), atol=1e-12):
        assert h == pytest.approx(math.log(len(p)), abs=1e-9)


def test_logdet_simple() -> None:
    assert cholesky_logdet(np.eye(4)) == 0.0
    assert cholesky_logdet(np.diag([4.0, 9.0])) == pytest.approx(math.log(36))


def test_logdet_oracle() -> None:
    rng = np.random.default_rng(1234)
    for _ in range(500):
        dim = int(rng.integers(1, 5))
        a = random_spd(rng, dim)
        expected = math.log(cofactor_det(a))
        actual = cholesky_logdet(a)
        assert abs(actual - expected) <= 1e-8 * max(1.0, abs(expected))


def test_logdet_jitter() -> None:
    # Singular, but jitter makes it positive definite
    logdet = cholesky_logdet(np.zeros((2, 2)))
    assert math.isfinite(logdet)
    with pytest.raises(NotPositiveDefiniteError):
        cholesky_logdet(np.diag([1.0, -1.0]))


def test_trajectory_mean() -> None:
    np.testing.assert_allclose(trajectory_mean([(0, 0), (1, 1)]), [0.5, 0.5])
    np.testing.assert_allclose(trajectory_mean([(3.5, -2.0)]), [3.5, -2.0])
    np.testing.assert_allclose(trajectory_mean([(0, 0), (0, 2), (3, 1)]), [1, 1])
    with pytest.raises(EmptyInputError):
        trajectory_mean(np.zeros((0, 2)))


def test_trajectory_covariance() -> None:
    np.testing.assert_array_equal(
        trajectory_covariance([(1, 2)] * 5), np.zeros((2, 2))
    )
    np.testing.assert_allclose(
        trajectory_covariance([(0, 0), (2, 0)]), [[2, 0], [0, 0]]
    )
    with pytest.raises(InsufficientSamplesError):
        trajectory_covariance([(0, 0)])


@settings(max_examples=50, deadline=None)
@given(length=st.integers(2, 30), dim=st.integers(1, 4), seed=st.integers(0, 10000))
def test_covariance_psd(length: int, dim: int, seed: int) -> None:
    traj = np.random.default_rng(seed).normal(size=(length, dim))
    cov = trajectory_covariance(traj)
    np.testing.assert_array_equal(cov, cov.T)
    assert sym_eigenvalues(cov).eigenvalues.min() >= -1e-10


def test_cofactor_oracle_sanity() -> None:
    # The oracle itself, against a permutation expansion
    m = np.arange(9, dtype=float).reshape(3, 3) + np.eye(3)
    perm_det = 0.0
    for perm in itertools.permutations(range(3)):
        sign = np.linalg.det(np.eye(3)[list(perm)])
        perm_det += sign * np.prod([m[i, perm[i]] for i in range(3)])
    assert cofactor_det(m) == pytest.approx(perm_det)
