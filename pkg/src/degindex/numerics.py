"""Dense linear algebra used by the spectral and degree machinery.

Thin contracts over LAPACK (via scipy): each routine checks the condition it
promises and raises a specific error instead of returning garbage.
"""

from __future__ import annotations

import warnings

import numpy as np
import scipy.linalg as sla

MAX_DIM = 512
DEFAULT_KERNEL_TOL = 1e-8


class NumericsError(ArithmeticError):
    pass


class SingularMatrixError(NumericsError):
    pass


class NotPositiveDefiniteError(NumericsError):
    pass


class ConvergenceError(NumericsError):
    pass


def as_matrix(a, square: bool = True) -> np.ndarray:
    m = np.array(a, dtype=float, ndmin=2)
    if m.ndim != 2:
        raise ValueError("expected a 2-D matrix")
    if square and m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def solve_linear(A, b) -> np.ndarray:
    """Solve ``A x = b`` by partial-pivoting LU.

    Raises SingularMatrixError when a pivot falls below ``1e-14 * ||A||``.
    """
    A = as_matrix(A)
    b = np.asarray(b, dtype=float)
    norm = np.linalg.norm(A, 2) if A.size else 0.0
    if A.shape[0] == 0:
        return np.zeros_like(b)
    with warnings.catch_warnings():
        # exact zero pivots are reported below with our own error
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(A, check_finite=False)
    pivots = np.abs(np.diag(lu))
    if norm == 0.0 or pivots.min() < 1e-14 * norm:
        raise SingularMatrixError(
            f"matrix singular to working precision (min pivot {pivots.min():.3e}, norm {norm:.3e})")
    return sla.lu_solve((lu, piv), b, check_finite=False)


def cholesky(K) -> np.ndarray:
    """Lower Cholesky factor, or NotPositiveDefiniteError."""
    K = as_matrix(K)
    try:
        return np.linalg.cholesky(K)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError("matrix is not positive definite") from exc


def is_symmetric(A, rtol: float = 1e-10) -> bool:
    A = np.asarray(A, dtype=float)
    scale = np.abs(A).max(initial=0.0)
    return bool(np.abs(A - A.T).max(initial=0.0) <= rtol * max(scale, np.finfo(float).tiny))


def eigen_symmetric_pencil(A, K):
    """Ascending eigenvalues of ``A v = lam K v`` with K-orthonormal eigenvectors."""
    A = as_matrix(A)
    K = as_matrix(K)
    if not is_symmetric(A):
        raise ValueError("A is not symmetric")
    cholesky(K)
    A = 0.5 * (A + A.T)
    K = 0.5 * (K + K.T)
    lam, vecs = sla.eigh(A, K)
    return lam, vecs


def eigen_general(M) -> np.ndarray:
    """Eigenvalues of a square matrix, conjugate pairs returned exactly paired.

    Sorted by (real part, imaginary part) so the result is canonical.
    """
    M = as_matrix(M)
    n = M.shape[0]
    if n > MAX_DIM:
        raise ValueError(f"dimension {n} exceeds {MAX_DIM}")
    if n == 0:
        return np.zeros(0, dtype=complex)
    try:
        lam = sla.eigvals(M, check_finite=False)
    except sla.LinAlgError as exc:
        raise ConvergenceError("QR iteration failed to converge") from exc
    lam = np.asarray(lam, dtype=complex)
    # Pair conjugates exactly: LAPACK returns them adjacent for real input.
    out = lam.copy()
    i = 0
    while i < n:
        if out[i].imag != 0.0 and i + 1 < n and np.isclose(out[i], np.conj(out[i + 1]), rtol=1e-12, atol=0):
            z = complex(0.5 * (out[i].real + out[i + 1].real), abs(0.5 * (out[i].imag - out[i + 1].imag)))
            out[i], out[i + 1] = z, np.conj(z)
            i += 2
        else:
            i += 1
    order = np.lexsort((out.imag, out.real))
    return out[order]


def kernel_basis(M, tol: float = DEFAULT_KERNEL_TOL) -> np.ndarray:
    """Orthonormal basis (columns) of the numerical null space of M.

    Singular values at or below ``tol * sigma_max`` count as zero.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    M = as_matrix(M, square=False)
    n = M.shape[1]
    if M.size == 0:
        return np.eye(n)
    _, s, vh = np.linalg.svd(M)
    smax = s[0] if s.size else 0.0
    if smax == 0.0:
        return np.eye(n)
    rank = int(np.sum(s > tol * smax))
    return canonical_signs(vh[rank:].T.copy())


def canonical_signs(V: np.ndarray) -> np.ndarray:
    """Flip columns so each one's largest-magnitude entry is positive."""
    V = np.array(V, dtype=float)
    for j in range(V.shape[1]):
        k = int(np.argmax(np.abs(V[:, j])))
        if V[k, j] < 0:
            V[:, j] = -V[:, j]
    return V


def left_kernel_basis(M, tol: float = DEFAULT_KERNEL_TOL) -> np.ndarray:
    return kernel_basis(np.asarray(M).T, tol)


def damped_newton(F, x0, jacobian, *, tol, max_iter: int = 100, max_halvings: int = 30):
    """Damped Newton iteration on ``F(x) = 0``.

    ``tol(x)`` gives the residual threshold at x. Returns ``(x, residual_norm,
    converged)``; never raises on non-convergence.
    """
    x = np.array(x0, dtype=float)
    try:
        r = np.asarray(F(x), dtype=float)
    except (ArithmeticError, ValueError):
        return x, np.inf, False
    rn = np.linalg.norm(r)
    for _ in range(max_iter):
        if not np.isfinite(rn):
            return x, rn, False
        if rn <= tol(x):
            return x, rn, True
        J = jacobian(x)
        if not np.all(np.isfinite(J)):
            return x, rn, False
        try:
            step = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(J, -r, rcond=None)[0]
        if not np.all(np.isfinite(step)):
            return x, rn, False
        lam = 1.0
        for _ in range(max_halvings + 1):
            trial = x + lam * step
            try:
                rt = np.asarray(F(trial), dtype=float)
                rtn = np.linalg.norm(rt)
            except (ArithmeticError, ValueError):
                rtn = np.inf
            if np.isfinite(rtn) and rtn < rn:
                break
            lam *= 0.5
        else:
            return x, rn, False
        x, r, rn = trial, rt, rtn
    return x, rn, bool(rn <= tol(x))
