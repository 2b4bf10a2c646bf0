"""Spectral structure of a linearization and the index formulas built on it.

A linearization is given as a pencil (A, K): ``v^T A u`` is the bilinear form
of the derivative and K is the Gram matrix of the inner product, so that
``M = K^{-1} A`` is the derivative composed with the Riesz map. Internally we
work in K-orthonormal coordinates ``w = L^T v`` (``K = L L^T``), where M
becomes ``B = L^{-1} A L^{-T}``; kernels and projectors computed there are
mapped back to coefficient space.

For a zero (or infinity) with linear part M and homogeneous principal
remainder C, the index is

    (-1)^(nu + n0 - l) * deg(Theta),   Theta(c) = P0 T P1 K^{-1} C(sum c_i phi_i),

where nu counts negative real eigenvalues with multiplicity, n0 is the
dimension of the root space X1 at eigenvalue 0, l the number of Jordan blocks
(= dim ker M), and T solves ``T N = P^0 P1`` on X1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.linalg as sla

from . import numerics
from .degree import FiniteMap, degree_homogeneous, sphere_samples
from .numerics import DEFAULT_KERNEL_TOL, cholesky, is_symmetric, kernel_basis, solve_linear


class ReductionError(ArithmeticError):
    pass


class StructuralError(ReductionError):
    """The normalizer T cannot be built from the computed Jordan data."""


class ToleranceAmbiguityError(ReductionError):
    """An eigenvalue sits too close to the kernel threshold to classify."""


REALITY_TOL = 1e-8
T_RESIDUAL_TOL = 1e-8


NU_CONVENTION = "real negative eigenvalues only; complex pairs excluded"


@dataclass(frozen=True)
class OperatorPencil:
    A: np.ndarray
    K: np.ndarray
    mass: Optional[np.ndarray] = None
    lower: Optional[np.ndarray] = None
    label: str = ""

    def __post_init__(self):
        A = numerics.as_matrix(self.A)
        K = numerics.as_matrix(self.K)
        if A.shape != K.shape:
            raise ValueError(f"A {A.shape} and K {K.shape} differ in shape")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "K", K)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def symmetric(self) -> bool:
        return is_symmetric(self.A)

    def operator(self) -> np.ndarray:
        """M = K^{-1} A."""
        return solve_linear(self.K, self.A)

    def scaled(self, c: float) -> "OperatorPencil":
        return OperatorPencil(c * self.A, c * self.K,
                              None if self.mass is None else c * self.mass,
                              None if self.lower is None else c * self.lower, self.label)


@dataclass
class SpectralStructure:
    nu: int
    n0: int
    l: int
    eigenvalues: np.ndarray
    norm: float
    symmetric: bool
    kernel_basis: np.ndarray
    root_basis: np.ndarray
    P0: np.ndarray
    P1: np.ndarray
    T: np.ndarray
    N: np.ndarray
    S: np.ndarray
    root_exponent: int
    orientation_flipped: bool = False
    completion: str = "identity"
    # coordinate maps (K-orthonormal frame)
    chol: np.ndarray = field(default=None, repr=False)
    root_frame: np.ndarray = field(default=None, repr=False)
    root_coords: np.ndarray = field(default=None, repr=False)

    @property
    def complex_pairs(self) -> np.ndarray:
        lam = self.eigenvalues
        return lam[np.abs(lam.imag) > REALITY_TOL * self.norm]

    @property
    def t_residual(self) -> float:
        if self.n0 == 0:
            return 0.0
        return float(np.linalg.norm(self.T @ self.N - self.S, 2))

    @property
    def t_determinant(self) -> float:
        return float(np.linalg.det(self.T)) if self.n0 else 1.0

    def summary(self) -> dict:
        lam = self.eigenvalues
        real = lam[np.abs(lam.imag) <= REALITY_TOL * self.norm].real
        return {
            "nu": self.nu, "n0": self.n0, "l": self.l,
            "nu_convention": NU_CONVENTION,
            "symmetric": self.symmetric,
            "operator_norm": self.norm,
            "smallest_real_eigenvalues": sorted(real.tolist())[:8],
            "complex_pairs": [[z.real, z.imag] for z in self.complex_pairs if z.imag > 0],
            "T_residual": self.t_residual,
            "T_determinant": self.t_determinant,
            "root_exponent": self.root_exponent,
            "completion": self.completion,
        }


def _orthonormal_extension(X0: np.ndarray, R: np.ndarray) -> np.ndarray:
    """Orthonormal basis of span(R) whose first columns are X0."""
    l = X0.shape[1]
    n0 = R.shape[1]
    if n0 == l:
        return X0.copy()
    rest = R - X0 @ (X0.T @ R)
    u, s, _ = np.linalg.svd(rest, full_matrices=False)
    return np.hstack([X0, numerics.canonical_signs(u[:, : n0 - l])])


def _root_space(Bh: np.ndarray, tol: float):
    n = Bh.shape[0]
    d = 1
    power = Bh.copy()
    dims = [kernel_basis(power, tol).shape[1]]
    history = [(1, power)]
    while d < n:
        if len(dims) >= 3 and dims[-1] == dims[-2] == dims[-3]:
            break
        power = power @ power
        nrm = np.linalg.norm(power, 2)
        if nrm > 0:
            power = power / nrm
        d *= 2
        dims.append(kernel_basis(power, tol).shape[1] if nrm > 0 else n)
        history.append((d, power))
    d, power = history[-1]
    return d, power


def _complete_T(N: np.ndarray, S: np.ndarray, rank: int, completion, seed: int):
    n0 = N.shape[0]
    u, s, vh = np.linalg.svd(N)
    # min-norm solution of T N = S on the range of N
    Ninv = (vh[:rank].T / s[:rank]) @ u[:, :rank].T
    T0 = S @ Ninv
    Y = u[:, rank:]
    label = "identity"
    if completion is not None:
        F = np.asarray(completion, dtype=float).reshape(n0, Y.shape[1])
        label = "supplied"
    else:
        F = Y.copy()
    T = T0 + F @ Y.T
    if completion is None and abs(np.linalg.det(T)) < 1e-8 * max(1.0, np.linalg.norm(T, 2)) ** n0:
        rng = np.random.default_rng(seed)
        for _ in range(20):
            F = rng.standard_normal((n0, Y.shape[1]))
            T = T0 + F @ Y.T
            if abs(np.linalg.det(T)) >= 1e-8 * max(1.0, np.linalg.norm(T, 2)) ** n0:
                label = f"random(seed={seed})"
                break
    return T, Y, label


def _negative_count(lam: np.ndarray, n0: int, norm: float, tol: float) -> int:
    """Negative real eigenvalues outside the root space at 0 (its n0
    eigenvalues are the ones closest to 0)."""
    rest = lam[np.argsort(np.abs(lam), kind="stable")[n0:]]
    real = np.abs(rest.imag) <= REALITY_TOL * max(norm, 1e-300)
    return int(np.sum(real & (rest.real < -tol * norm)))


def analyze_pencil(pencil: OperatorPencil, tol: float = DEFAULT_KERNEL_TOL,
                   completion=None, seed: int = 0) -> SpectralStructure:
    """Extract nu, the kernel and root space, projectors and the normalizer T.

    ``completion`` optionally fixes the free part of T (an ``n0 x l`` matrix
    acting on the directions where ``T N = S`` imposes nothing). Whatever the
    completion, T is oriented so that ``sign det T = (-1)^(n0 - l)``; with that
    normalisation the index formulas do not depend on the choice.
    """
    n = pencil.n
    if n > numerics.MAX_DIM:
        raise ValueError(f"dimension {n} exceeds {numerics.MAX_DIM}")
    L = cholesky(pencil.K)
    B = sla.solve_triangular(L, pencil.A, lower=True)
    B = sla.solve_triangular(L, B.T, lower=True).T
    symmetric = is_symmetric(pencil.A) and is_symmetric(pencil.K)
    if symmetric:
        B = 0.5 * (B + B.T)
        lam = np.linalg.eigvalsh(B).astype(complex)
    else:
        lam = numerics.eigen_general(B)
    norm = float(np.linalg.norm(B, 2)) if n else 0.0
    if norm == 0.0:
        norm = 1.0 if n == 0 else norm
    if n and norm > 0:
        # classify by singular values: eigenvalues of a defective zero are
        # only accurate to about sqrt(eps)
        sv = np.linalg.svd(B / norm, compute_uv=False)
        ambiguous = (sv > 0.1 * tol) & (sv < 10 * tol)
        if np.any(ambiguous):
            raise ToleranceAmbiguityError(
                f"singular value(s) {sv[ambiguous].tolist()} of the normalized operator within "
                f"a decade of the kernel threshold {tol:.1e}")

    if n == 0 or norm == 0.0:
        X0 = np.eye(n)
        Bh = np.zeros((n, n))
    else:
        Bh = B / norm
        X0 = kernel_basis(Bh, tol)
    l = X0.shape[1]
    if l == 0:
        d, R, U = 1, np.zeros((n, 0)), np.zeros((n, 0))
    else:
        d, power = _root_space(Bh, tol)
        R = _orthonormal_extension(X0, kernel_basis(power, tol))
        U = kernel_basis(power.T, tol)
        if U.shape[1] != R.shape[1]:
            raise StructuralError(
                f"left and right root spaces differ in dimension ({U.shape[1]} vs {R.shape[1]})")
    n0 = R.shape[1]
    nu = _negative_count(lam, n0, norm, tol)

    if n0:
        G = U.T @ R
        if np.linalg.svd(G, compute_uv=False).min() < 1e-10:
            raise StructuralError("root space is not complemented by the range (U^T R singular)")
        C1 = np.linalg.solve(G, U.T)
        N = C1 @ Bh @ R * norm
    else:
        C1 = np.zeros((0, n))
        N = np.zeros((0, 0))
    S = np.diag(np.r_[np.zeros(l), np.ones(n0 - l)])

    flipped = False
    label = "identity"
    if n0 == 0:
        T = np.zeros((0, 0))
    elif n0 == l:
        T = np.eye(n0)
        if completion is not None:
            T = np.asarray(completion, dtype=float).reshape(n0, n0)
            label = "supplied"
    else:
        T, Y, label = _complete_T(N, S, n0 - l, completion, seed)
        want = (-1) ** (n0 - l)
        if np.sign(np.linalg.det(T)) != want:
            y = Y[:, :1]
            T = T @ (np.eye(n0) - 2 * y @ y.T)
            flipped = True
    if n0:
        resid = np.linalg.norm(T @ N - S, 2)
        det = np.linalg.det(T)
        if resid > T_RESIDUAL_TOL or det == 0 or not np.isfinite(det):
            sv = np.linalg.svd(N, compute_uv=False)
            raise StructuralError(
                f"T N = P^0 P_1 unsolvable to {T_RESIDUAL_TOL:g} (residual {resid:.3e}, det T {det:.3e}); "
                f"Jordan data n0={n0}, l={l}, singular values of N={sv.tolist()}")
        if n0 == l and completion is not None and np.sign(det) != 1:
            T = T @ np.diag(np.r_[-1.0, np.ones(n0 - 1)])
            flipped = True

    Lt = L.T
    E = np.diag(np.r_[np.ones(l), np.zeros(n0 - l)]) if n0 else np.zeros((0, 0))
    P1w = R @ C1
    P0w = R @ E @ C1
    P1 = sla.solve_triangular(Lt, P1w @ Lt, lower=False)
    P0 = sla.solve_triangular(Lt, P0w @ Lt, lower=False)
    root_v = sla.solve_triangular(Lt, R, lower=False) if n0 else np.zeros((n, 0))
    return SpectralStructure(
        nu=nu, n0=n0, l=l, eigenvalues=lam, norm=norm, symmetric=symmetric,
        kernel_basis=root_v[:, :l], root_basis=root_v, P0=P0, P1=P1, T=T, N=N, S=S,
        root_exponent=d, orientation_flipped=flipped, completion=label,
        chol=L, root_frame=R, root_coords=C1,
    )


@dataclass(frozen=True)
class ReducedMap:
    dim: int
    evaluator: Callable[[np.ndarray], np.ndarray]
    order: float
    parity: str = "none"

    def __call__(self, c) -> np.ndarray:
        return self.evaluator(np.asarray(c, dtype=float).reshape(self.dim))

    def as_finite_map(self) -> FiniteMap:
        return FiniteMap(self.dim, self.evaluator, order=self.order, odd=self.parity == "odd")


def _rel_dev(a, b) -> float:
    scale = max(np.abs(a).max(initial=0.0), np.abs(b).max(initial=0.0))
    return 0.0 if scale == 0 else float(np.abs(a - b).max() / scale)


def build_reduced_map(structure: SpectralStructure, pencil: OperatorPencil,
                      residual_assembler: Callable[[np.ndarray], np.ndarray],
                      order: float, parity: str = "none",
                      check_tol: float = 1e-8) -> ReducedMap:
    """Theta(c) = kernel coordinates of P0 T P1 K^{-1} C(sum c_i phi_i)."""
    l = structure.l
    if l == 0:
        raise ValueError("kernel is empty; nothing to reduce")
    phi = structure.kernel_basis
    Lt = structure.chol.T
    C1 = structure.root_coords
    T = structure.T

    def general(c):
        r = np.asarray(residual_assembler(phi @ c), dtype=float)
        jc = solve_linear(pencil.K, r)
        y = C1 @ (Lt @ jc)
        return (T @ y)[:l]

    def pairing(c):
        return phi.T @ np.asarray(residual_assembler(phi @ c), dtype=float)

    samples = sphere_samples(l, 16 if l > 1 else 2)
    if structure.symmetric and structure.n0 == l:
        for c in samples:
            dev = _rel_dev(general(c), pairing(c))
            if dev > check_tol:
                raise ReductionError(f"duality pairing and projection routes disagree by {dev:.3e}")
        evaluator = pairing
    else:
        evaluator = general

    for c in samples:
        base = evaluator(c)
        for s in (0.5, 2.0, 10.0):
            dev = _rel_dev(evaluator(s * c), s ** order * base)
            if dev > check_tol:
                raise ReductionError(f"reduced map is not homogeneous of order {order} (deviation {dev:.3e})")
        if parity in ("odd", "even"):
            sign = -1.0 if parity == "odd" else 1.0
            dev = _rel_dev(evaluator(-c), sign * base)
            if dev > check_tol:
                raise ReductionError(f"reduced map is not {parity} (deviation {dev:.3e})")
    return ReducedMap(l, evaluator, order, parity)


@dataclass(frozen=True)
class IndexResult:
    value: int
    side: str
    nu: int
    n0: int
    l: int
    theta_degree: int
    heuristic: bool = False
    complement_index: int = 1

    def as_dict(self) -> dict:
        return {
            "side": self.side, "value": self.value, "nu": self.nu, "n0": self.n0, "l": self.l,
            "theta_degree": self.theta_degree, "heuristic": self.heuristic,
            "complement_index": self.complement_index,
        }


def _index(structure: SpectralStructure, theta: Optional[ReducedMap], side: str) -> IndexResult:
    sign_nu = (-1) ** structure.nu
    if structure.l == 0:
        return IndexResult(sign_nu, side, structure.nu, 0, 0, 1, False, sign_nu)
    if theta is None:
        raise ValueError("degenerate linearization needs a reduced map")
    deg = degree_homogeneous(theta.as_finite_map())
    value = (-1) ** (structure.nu + structure.n0 - structure.l) * deg.value
    return IndexResult(value, side, structure.nu, structure.n0, structure.l, deg.value,
                       deg.heuristic, sign_nu)


def index_at_zero(structure: SpectralStructure, theta: Optional[ReducedMap] = None) -> IndexResult:
    if structure.l and theta is not None and not theta.order > 1:
        raise ValueError(f"zero-side principal part must have order > 1, got {theta.order}")
    return _index(structure, theta, "zero")


def index_at_infinity(structure: SpectralStructure, theta: Optional[ReducedMap] = None) -> IndexResult:
    if structure.l and theta is not None and not 0 <= theta.order < 1:
        raise ValueError(f"infinity-side principal part must have order in [0, 1), got {theta.order}")
    return _index(structure, theta, "infinity")


def kronecker_check(zero_indices, infinity_index: int) -> bool:
    return int(sum(zero_indices)) == int(infinity_index)
