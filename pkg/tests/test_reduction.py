import numpy as np
import pytest

from degindex.degree import degree_2d_winding
from degindex.reduction import (
    OperatorPencil, StructuralError, ToleranceAmbiguityError, analyze_pencil, build_reduced_map, index_at_infinity,
    index_at_zero, kronecker_check,
)


def pencil(A, K=None):
    A = np.asarray(A, dtype=float)
    return OperatorPencil(A, np.eye(A.shape[0]) if K is None else K)


def test_symmetric_degenerate_structure():
    st = analyze_pencil(pencil(np.diag([0.0, 1.0])))
    assert (st.nu, st.n0, st.l) == (0, 1, 1)
    np.testing.assert_allclose(st.kernel_basis, [[1.0], [0.0]])
    np.testing.assert_allclose(st.T, [[1.0]])


def test_jordan_structure():
    st = analyze_pencil(pencil([[0.0, 1.0], [0.0, 0.0]]))
    assert (st.nu, st.n0, st.l) == (0, 2, 1)
    np.testing.assert_allclose(st.kernel_basis, [[1.0], [0.0]])
    assert st.t_residual <= 1e-12
    assert np.sign(st.t_determinant) == -1  # (-1)^(n0 - l)
    # T N = S fixes the first column of T
    np.testing.assert_allclose(st.T[:, 0], [0.0, 1.0], atol=1e-12)


def test_invertible_structure():
    st = analyze_pencil(pencil(np.diag([-1.0, -1.0, 2.0])))
    assert (st.nu, st.n0, st.l) == (2, 0, 0)
    assert st.kernel_basis.shape == (3, 0)


def test_projector_identities():
    A = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 3.0]])
    st = analyze_pencil(pencil(A))
    P0, P1 = st.P0, st.P1
    np.testing.assert_allclose(P0 @ P0, P0, atol=1e-12)
    np.testing.assert_allclose(P1 @ P1, P1, atol=1e-12)
    np.testing.assert_allclose(P0 @ P1, P0, atol=1e-12)


def test_symmetric_pencils_have_identity_T(rng):
    Q, _ = np.linalg.qr(rng.standard_normal((5, 5)))
    A = Q @ np.diag([0.0, 0.0, 1.0, -2.0, 4.0]) @ Q.T
    st = analyze_pencil(pencil(A))
    assert st.n0 == st.l == 2 and st.nu == 1
    np.testing.assert_allclose(st.T, np.eye(2))


def test_gram_matrix_changes_kernel_frame():
    K = np.diag([4.0, 1.0])
    st = analyze_pencil(OperatorPencil(np.diag([0.0, 1.0]), K))
    phi = st.kernel_basis[:, 0]
    assert phi @ K @ phi == pytest.approx(1.0)


def test_ambiguous_eigenvalue_rejected():
    with pytest.raises(ToleranceAmbiguityError):
        analyze_pencil(pencil(np.diag([1e-8, 1.0])), tol=1e-8)


def test_reduced_map_examples():
    p = pencil(np.diag([0.0, 1.0]))
    st = analyze_pencil(p)
    theta = build_reduced_map(st, p, lambda u: np.array([u[0] ** 3, 0.0]), 3.0, "odd")
    assert theta(np.array([2.0]))[0] == pytest.approx(8.0)

    p = pencil([[0.0, 1.0], [0.0, 0.0]])
    st = analyze_pencil(p, completion=np.array([[1.0], [0.0]]))
    np.testing.assert_allclose(st.T, [[0.0, 1.0], [1.0, 0.0]], atol=1e-12)
    theta = build_reduced_map(st, p, lambda u: np.array([0.0, u[0] ** 3]), 3.0, "odd")
    assert theta(np.array([1.5]))[0] == pytest.approx(1.5 ** 3)


def test_reduced_map_rejects_wrong_order():
    p = pencil(np.diag([0.0, 1.0]))
    st = analyze_pencil(p)
    with pytest.raises(ArithmeticError):
        build_reduced_map(st, p, lambda u: np.array([u[0] ** 3, 0.0]), 2.0)


def test_index_examples():
    p = pencil(np.diag([0.0, 1.0]))
    st = analyze_pencil(p)
    theta = build_reduced_map(st, p, lambda u: np.array([u[0] ** 3, 0.0]), 3.0, "odd")
    assert index_at_zero(st, theta).value == 1
    assert degree_2d_winding(lambda u: np.array([u[0] ** 3, u[1]]), 0.1) == 1

    p = pencil([[0.0, 1.0], [0.0, 0.0]])
    st = analyze_pencil(p)
    theta = build_reduced_map(st, p, lambda u: np.array([0.0, u[0] ** 3]), 3.0, "odd")
    assert index_at_zero(st, theta).value == -1
    assert degree_2d_winding(lambda u: np.array([u[1], u[0] ** 3]), 0.1) == -1

    assert index_at_zero(analyze_pencil(pencil(np.diag([-1.0, 1.0])))).value == -1
    assert index_at_infinity(analyze_pencil(pencil(np.diag([-1.0, -1.0, 1.0])))).value == 1


def test_index_at_infinity_even_map_has_index_zero():
    p = pencil(np.diag([-1.0, 0.0]))
    st = analyze_pencil(p)
    theta = build_reduced_map(st, p, lambda u: np.array([0.0, abs(u[1]) ** 0.5]), 0.5, "even")
    res = index_at_infinity(st, theta)
    assert res.nu == 1 and res.theta_degree == 0 and res.value == 0


def test_order_ranges_enforced():
    p = pencil(np.diag([0.0, 1.0]))
    st = analyze_pencil(p)
    sub = build_reduced_map(st, p, lambda u: np.array([np.sign(u[0]) * abs(u[0]) ** 0.5, 0.0]), 0.5, "odd")
    with pytest.raises(ValueError):
        index_at_zero(st, sub)


def test_singular_completion_rejected():
    with pytest.raises(StructuralError):
        analyze_pencil(pencil([[0.0, 1.0], [0.0, 0.0]]), completion=np.array([[0.0], [1.0]]))


@pytest.mark.parametrize("F", [np.array([[1.0], [0.0]]), np.array([[2.0], [-5.0]]),
                               np.array([[-1.0], [0.3]])])
def test_index_independent_of_completion(F):
    A = np.array([[0.0, 1.0], [0.0, 0.0]])
    C = lambda u: np.array([0.0, u[0] ** 3])
    p = pencil(A)
    ref = index_at_zero(analyze_pencil(p), build_reduced_map(analyze_pencil(p), p, C, 3.0, "odd"))
    st = analyze_pencil(p, completion=F)
    assert st.t_residual <= 1e-12 and st.t_determinant != 0
    assert index_at_zero(st, build_reduced_map(st, p, C, 3.0, "odd")).value == ref.value


def test_random_three_dimensional_jordan_cases(rng):
    # similarity transforms of a Jordan block plus a stable direction
    for _ in range(5):
        S = rng.standard_normal((3, 3)) + 3 * np.eye(3)
        J = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 2.0]])
        A = S @ J @ np.linalg.inv(S)
        st = analyze_pencil(pencil(A))
        assert (st.n0, st.l) == (2, 1)
        assert st.t_residual <= 1e-8


def test_kronecker_examples():
    assert kronecker_check([1, -1, -1], -1)
    assert kronecker_check([1], 1)
    assert not kronecker_check([1], 0)
