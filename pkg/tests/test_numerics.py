import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from degindex.numerics import (
    MAX_DIM, NotPositiveDefiniteError, SingularMatrixError, damped_newton, eigen_general,
    eigen_symmetric_pencil, kernel_basis, solve_linear,
)


def test_solve_examples():
    np.testing.assert_allclose(solve_linear(np.eye(2), [1, 2]), [1, 2])
    np.testing.assert_allclose(solve_linear(np.diag([2.0, 4.0]), [2, 4]), [1, 1])
    with pytest.raises(SingularMatrixError):
        solve_linear(np.zeros((2, 2)), [1, 0])


def test_symmetric_pencil_examples():
    lam, V = eigen_symmetric_pencil(np.diag([1.0, 2.0]), np.eye(2))
    np.testing.assert_allclose(lam, [1, 2])
    np.testing.assert_allclose(np.abs(V), np.eye(2))
    lam, _ = eigen_symmetric_pencil(np.eye(2), np.diag([1.0, 4.0]))
    np.testing.assert_allclose(lam, [0.25, 1.0])
    lam, _ = eigen_symmetric_pencil(-np.eye(2), np.eye(2))
    assert np.sum(lam < 0) == 2


def test_pencil_requires_spd_gram():
    with pytest.raises(NotPositiveDefiniteError):
        eigen_symmetric_pencil(np.eye(2), np.diag([1.0, -1.0]))


def test_general_eigenvalues():
    np.testing.assert_allclose(eigen_general([[0, 1], [0, 0]]), [0, 0])
    lam = eigen_general([[0, -1], [1, 0]])
    np.testing.assert_allclose(lam, [-1j, 1j])
    assert lam[0] == np.conj(lam[1])
    np.testing.assert_allclose(eigen_general(np.diag([-3.0, 5.0])), [-3, 5])


def test_kernel_examples():
    K = kernel_basis(np.diag([0.0, 1.0]))
    np.testing.assert_allclose(K, [[1.0], [0.0]])
    assert kernel_basis(np.diag([1.0, 2.0])).shape == (2, 0)
    np.testing.assert_allclose(kernel_basis(np.zeros((3, 3))), np.eye(3))


def test_dimension_cap():
    with pytest.raises(ValueError):
        eigen_general(np.eye(MAX_DIM + 1))


@settings(max_examples=50, deadline=None)
@given(arrays(float, (4, 4), elements=st.floats(-5, 5)))
def test_kernel_vectors_are_annihilated(M):
    M = M.copy()
    M[:, 0] = M[:, 1]  # force rank deficiency
    K = kernel_basis(M, 1e-10)
    assert K.shape[1] >= 1
    np.testing.assert_allclose(K.T @ K, np.eye(K.shape[1]), atol=1e-10)
    assert np.linalg.norm(M @ K) <= 1e-8 * max(1.0, np.linalg.norm(M, 2))


def test_damped_newton_converges_with_damping():
    F = lambda x: np.array([np.arctan(x[0])])
    J = lambda x: np.array([[1.0 / (1.0 + x[0] ** 2)]])
    x, rn, ok = damped_newton(F, [10.0], J, tol=lambda _x: 1e-12)
    assert ok and abs(x[0]) < 1e-12


def test_damped_newton_reports_failure():
    F = lambda x: np.array([x[0] ** 2 + 1.0])
    J = lambda x: np.array([[2 * x[0]]])
    _, _, ok = damped_newton(F, [1.0], J, tol=lambda _x: 1e-12, max_iter=20)
    assert not ok
