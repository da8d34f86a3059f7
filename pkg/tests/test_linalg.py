import numpy as np
import pytest

from lwrfem.linalg import (
    DimensionMismatchError,
    SingularMatrixError,
    lu_factorize,
    lu_solve,
    mat_mul,
)


def test_identity_solve():
    b = np.array([3.0, -1.0, 2.5])
    x = lu_solve(np.eye(3), b)
    assert np.allclose(x, b, atol=1e-15)


def test_diagonal_solve():
    a = np.array([[2.0, 0.0], [0.0, 4.0]])
    x = lu_solve(a, np.array([2.0, 8.0]))
    assert np.allclose(x, [1.0, 2.0], atol=1e-15)


def test_recovers_known_solution(rng):
    a = rng.standard_normal((20, 20)) + 5.0 * np.eye(20)
    x_true = rng.standard_normal(20)
    x = lu_solve(a, a @ x_true)
    assert np.abs(x - x_true).max() < 1e-9


def test_residual_bound_random_systems(rng):
    for _ in range(100):
        n = rng.integers(2, 30)
        a = rng.standard_normal((n, n)) + 3.0 * np.eye(n)
        b = rng.standard_normal(n)
        x = lu_solve(a, b)
        residual = np.linalg.norm(a @ x - b)
        bound = 1e-10 * (
            np.linalg.norm(a, "fro") * np.linalg.norm(x) + np.linalg.norm(b)
        )
        assert residual <= bound


def test_singular_matrix_raises():
    a = np.array([[1.0, 2.0], [2.0, 4.0]])  # rank 1
    with pytest.raises(SingularMatrixError):
        lu_solve(a, np.array([1.0, 1.0]))
    with pytest.raises(SingularMatrixError):
        lu_factorize(np.zeros((3, 3)))


def test_non_finite_entries_rejected():
    a = np.eye(3)
    a[1, 1] = np.nan
    with pytest.raises(ValueError):
        lu_factorize(a)


def test_dimension_checks():
    with pytest.raises(DimensionMismatchError):
        lu_solve(np.ones((3, 2)), np.ones(3))
    with pytest.raises(DimensionMismatchError):
        lu_solve(np.eye(3), np.ones(4))
    with pytest.raises(DimensionMismatchError):
        mat_mul(np.ones((2, 3)), np.ones((2, 3)))


def test_mat_mul_identity_and_hand_product(rng):
    a = rng.standard_normal((4, 4))
    assert np.allclose(mat_mul(a, np.eye(4)), a, atol=1e-15)
    assert np.allclose(mat_mul(np.eye(4), a), a, atol=1e-15)
    product = mat_mul(np.array([[1.0, 2.0], [3.0, 4.0]]), np.array([[5.0, 6.0], [7.0, 8.0]]))
    assert np.allclose(product, [[19.0, 22.0], [43.0, 50.0]], atol=1e-13)


def test_mat_mul_associative(rng):
    for _ in range(20):
        a, b, c = (rng.standard_normal((10, 10)) for _ in range(3))
        left = mat_mul(mat_mul(a, b), c)
        right = mat_mul(a, mat_mul(b, c))
        scale = np.abs(left).max()
        assert np.abs(left - right).max() <= 1e-12 * max(scale, 1.0)
