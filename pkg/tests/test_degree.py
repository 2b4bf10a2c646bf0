import numpy as np
import pytest

from degindex.degree import (
    BoundaryZeroError, FiniteMap, RefinementLimitError, SphereZeroError, degree_1d,
    degree_2d_winding, degree_homogeneous, degree_nd_regular,
)


def test_1d_examples():
    assert degree_1d(lambda u: u ** 3) == 1
    assert degree_1d(lambda u: u ** 2) == 0
    assert degree_1d(lambda u: -u) == -1
    with pytest.raises(BoundaryZeroError):
        degree_1d(lambda u: u - 1.0)


def test_winding_examples():
    assert degree_2d_winding(lambda u: u) == 1
    assert degree_2d_winding(lambda u: -u) == 1
    assert degree_2d_winding(lambda u: np.array([u[0] ** 2 - u[1] ** 2, 2 * u[0] * u[1]])) == 2
    assert degree_2d_winding(lambda u: np.array([u[0], -u[1]])) == -1


def test_winding_boundary_zero():
    with pytest.raises(BoundaryZeroError):
        degree_2d_winding(lambda u: u - np.array([1.0, 0.0]))


def test_winding_near_boundary_zero():
    # a zero 1e-9 away from the circle needs deep but local refinement
    assert degree_2d_winding(lambda u: u - np.array([1.0 + 1e-9, 0.0])) == 0
    assert degree_2d_winding(lambda u: u - np.array([1.0 - 1e-9, 0.0])) == 1


def _power(k):
    def F(u):
        z = complex(u[0], u[1]) ** k
        return np.array([z.real, z.imag])
    return F


def test_winding_high_degree_and_refinement_cap():
    assert degree_2d_winding(_power(100)) == 100
    with pytest.raises(RefinementLimitError):
        degree_2d_winding(_power(100), refinement_limit=256)


def test_nd_examples():
    r = degree_nd_regular(lambda u: -u, dim=3)
    assert r.value == -1 and r.heuristic
    assert degree_nd_regular(lambda u: np.array([u[0] ** 3, u[1], u[2]]), dim=3).value == 1
    assert degree_nd_regular(lambda u: u + np.array([2.0, 0, 0]), dim=3).value == 0


def test_nd_delegates_to_exact_engines():
    r = degree_nd_regular(lambda u: np.array([u[0] ** 3 - 3 * u[0] * u[1] ** 2,
                                              3 * u[0] ** 2 * u[1] - u[1] ** 3]), dim=2)
    assert r.value == 3 and not r.heuristic


def test_homogeneous_examples():
    assert degree_homogeneous(FiniteMap(1, lambda c: np.sign(c) * np.abs(c) ** 0.5, 0.5, True)).value == 1
    assert degree_homogeneous(FiniteMap(1, lambda c: c ** 2, 2.0)).value == 0
    cube = lambda u: np.array([u[0] ** 3 - 3 * u[0] * u[1] ** 2, 3 * u[0] ** 2 * u[1] - u[1] ** 3])
    assert degree_homogeneous(cube, dim=2).value == 3


def test_homogeneous_sphere_zero():
    with pytest.raises(SphereZeroError):
        degree_homogeneous(lambda u: np.array([u[0] * u[1], u[0] * u[1]]), dim=2)


def test_degree_is_homotopy_invariant_along_linear_path(rng):
    A = np.array([[2.0, 1.0], [0.5, 3.0]])
    for s in np.linspace(0, 1, 5):
        M = (1 - s) * np.eye(2) + s * A
        assert degree_2d_winding(lambda u, M=M: M @ u + 0.1 * u ** 3) == 1


from hypothesis import given, settings, strategies as st  # noqa: E402

roots = st.lists(
    st.tuples(st.floats(0.0, 0.8) | st.floats(1.2, 3.0), st.floats(0, 2 * np.pi)),
    min_size=1, max_size=8)


@settings(max_examples=40, deadline=None)
@given(roots, st.booleans())
def test_winding_counts_roots_inside(rs, conjugate):
    zs = [r * np.exp(1j * a) for r, a in rs]

    def F(u):
        z = complex(u[0], u[1])
        w = np.prod([z - a for a in zs])
        return np.array([w.real, -w.imag if conjugate else w.imag])
    inside = sum(abs(a) < 1 for a in zs)
    assert degree_2d_winding(F) == (-inside if conjugate else inside)
