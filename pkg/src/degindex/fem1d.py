"""Piecewise-linear Galerkin discretization of the Dirichlet problem

    -(f(x, u') + q(x, u))' + g(x, u) = 0 on (0, 1),  u(0) = u(1) = 0,

in weak form: ``<Phi(u), v> = int f(x,u') v' + q(x,u) v' + g(x,u) v dx``.
Coefficient vectors hold the N-1 interior nodal values; the Gram matrix of
the inner product ``int u' v'`` (the stiffness matrix) plays the role of the
Riesz map. General intervals (a, b) reduce to (0, 1) by x -> a + (b - a) x,
which rescales f by 1/(b-a) and g by (b-a).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Union

import numpy as np
import scipy.linalg as sla

from .exprlang import Expression, HomogeneityDecl, check_homogeneity, evaluate, parse
from .numerics import DEFAULT_KERNEL_TOL, kernel_basis
from .reduction import OperatorPencil

GAUSS_POINTS = 4
ALIGN_REL_TOL = 0.05


class FEMError(ValueError):
    pass


class EllipticityError(FEMError):
    pass


class MisdeclaredResonanceError(FEMError):
    pass


class SpecError(FEMError):
    pass


# --- problem description ---------------------------------------------------

@dataclass(frozen=True)
class PrincipalPart:
    expr: Expression
    decl: HomogeneityDecl

    def check(self):
        return check_homogeneity(self.expr, self.decl, 16)


Coefficient = Union[Expression, Callable, float, int]


@dataclass
class ProblemSpec:
    """Coefficients of the Dirichlet problem plus declared asymptotics.

    Expressions in ``f`` use the slope variable ``s``; ``q`` and ``g`` use
    ``t``; linearization coefficients are functions of ``x`` only. Named
    ``parameters`` may appear in any expression.
    """

    p: Expression
    q: Expression
    g: Expression
    f: Optional[Expression] = None
    fprime0: Optional[Expression] = None
    qprime0: Optional[Expression] = None
    gprime0: Optional[Expression] = None
    fprimeInf: Optional[Expression] = None
    qprimeInf: Optional[Expression] = None
    gprimeInf: Optional[Expression] = None
    fk: Optional[PrincipalPart] = None
    qk: Optional[PrincipalPart] = None
    gk: Optional[PrincipalPart] = None
    ql: Optional[PrincipalPart] = None
    gl: Optional[PrincipalPart] = None
    resonant_at_zero: bool = False
    resonant_at_infinity: bool = False
    resonance_mode_zero: Optional[int] = None
    resonance_mode_infinity: Optional[int] = None
    delta: Optional[float] = None
    parameters: dict = field(default_factory=dict)
    tune: Optional[dict] = None
    n_elements: int = 100
    source: dict = field(default_factory=dict)

    FIELDS_X = ("p", "fprime0", "qprime0", "gprime0", "fprimeInf", "qprimeInf", "gprimeInf")

    @classmethod
    def from_dict(cls, d: dict, n_elements: int = 100) -> "ProblemSpec":
        params = {k: float(v) for k, v in d.get("parameters", {}).items()}
        names = set(params)

        def ex(key, variables):
            text = d.get(key)
            if text is None:
                return None
            return parse(str(text), set(variables) | names)

        def part(key, variable):
            entry = d.get(key)
            if entry is None:
                return None
            expr = parse(entry["expr"], {"x", variable} | names)
            decl = HomogeneityDecl(float(entry["order"]), entry.get("parity", "none"), variable)
            return PrincipalPart(expr, decl)

        spec = cls(
            p=ex("p", "x") or parse("1", names),
            f=ex("f", "xs"),
            q=ex("q", "xt") or parse("0", names),
            g=ex("g", "xt") or parse("0", names),
            fprime0=ex("fprime0", "x"), qprime0=ex("qprime0", "x"), gprime0=ex("gprime0", "x"),
            fprimeInf=ex("fprimeInf", "x"), qprimeInf=ex("qprimeInf", "x"),
            gprimeInf=ex("gprimeInf", "x"),
            fk=part("fk", "s"), qk=part("qk", "t"), gk=part("gk", "t"),
            ql=part("ql", "t"), gl=part("gl", "t"),
            resonant_at_zero=bool(d.get("resonant_at_zero", False)),
            resonant_at_infinity=bool(d.get("resonant_at_infinity", False)),
            resonance_mode_zero=d.get("resonance_mode_zero"),
            resonance_mode_infinity=d.get("resonance_mode_infinity"),
            delta=None if d.get("delta") is None else float(d["delta"]),
            parameters=params,
            tune=d.get("tune"),
            n_elements=int(n_elements),
            source=dict(d),
        )
        return spec

    def with_parameter(self, name: str, value: float) -> "ProblemSpec":
        params = dict(self.parameters)
        params[name] = float(value)
        out = ProblemSpec(**{k: getattr(self, k) for k in self.__dataclass_fields__})
        out.parameters = params
        return out

    def principal_parts(self, side: str) -> dict:
        if side == "infinity":
            return {k: v for k, v in (("f", self.fk), ("q", self.qk), ("g", self.gk)) if v is not None}
        return {k: v for k, v in (("q", self.ql), ("g", self.gl)) if v is not None}

    # pointwise evaluation helpers -----------------------------------------
    def _env(self, **kw):
        env = dict(self.parameters)
        env.update(kw)
        return env

    def eval_x(self, expr: Optional[Expression], x, default=None):
        if expr is None:
            return default
        return evaluate(expr, self._env(x=x))

    def flux(self, x, s):
        if self.f is None:
            return evaluate(self.p, self._env(x=x)) * s
        return evaluate(self.f, self._env(x=x, s=s))

    def qval(self, x, t):
        return evaluate(self.q, self._env(x=x, t=t))

    def gval(self, x, t):
        return evaluate(self.g, self._env(x=x, t=t))

    def part_value(self, part: Optional[PrincipalPart], x, arg):
        if part is None:
            return np.zeros(np.broadcast_shapes(np.shape(x), np.shape(arg)))
        return evaluate(part.expr, self._env(x=x, **{part.decl.variable: arg}))

    def linear_coefficients(self, side: str, x):
        """(a, b, c) of the linearization at ``side`` in {"zero", "infinity"}."""
        h = 1e-6
        if side == "zero":
            if self.fprime0 is not None:
                a = self.eval_x(self.fprime0, x)
            elif self.f is None:
                a = self.eval_x(self.p, x)
            else:
                a = (self.flux(x, h) - self.flux(x, -h)) / (2 * h)
            b = self.eval_x(self.qprime0, x) if self.qprime0 is not None else \
                (self.qval(x, h) - self.qval(x, -h)) / (2 * h)
            c = self.eval_x(self.gprime0, x) if self.gprime0 is not None else \
                (self.gval(x, h) - self.gval(x, -h)) / (2 * h)
            return a, b, c
        if self.fprimeInf is not None:
            a = self.eval_x(self.fprimeInf, x)
        elif self.f is None:
            a = self.eval_x(self.p, x)
        else:
            raise SpecError("fprimeInf must be declared when f is given")
        if self.gprimeInf is None:
            raise SpecError("gprimeInf must be declared for the linearization at infinity")
        b = self.eval_x(self.qprimeInf, x, 0.0 * x)
        c = self.eval_x(self.gprimeInf, x)
        return a, b, c


# --- discretization ---------------------------------------------------------

class Discretization:
    def __init__(self, n_elements: int):
        if n_elements < 2:
            raise FEMError("need at least two elements")
        self.N = int(n_elements)
        self.h = 1.0 / self.N
        self.nodes = np.arange(self.N + 1) * self.h
        gp, gw = np.polynomial.legendre.leggauss(GAUSS_POINTS)
        self.xi = (gp + 1.0) / 2.0
        self.weights = gw * self.h / 2.0
        self.xq = (np.arange(self.N)[:, None] + self.xi[None, :]) * self.h
        self.phi = np.stack([1.0 - self.xi, self.xi])
        self.dphi = np.array([-1.0, 1.0]) / self.h

    @property
    def n(self) -> int:
        return self.N - 1

    @cached_property
    def stiffness(self) -> np.ndarray:
        one = np.ones_like(self.xq)
        return self.matrix(one, 0 * one, 0 * one)

    @cached_property
    def mass(self) -> np.ndarray:
        one = np.ones_like(self.xq)
        return self.matrix(0 * one, 0 * one, one)

    @cached_property
    def stiffness_norm(self) -> float:
        return float(np.linalg.norm(self.stiffness, 2))

    def full(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        return np.concatenate([[0.0], u, [0.0]])

    def at_quadrature(self, u):
        U = self.full(u)
        uq = U[:-1, None] * self.phi[0] + U[1:, None] * self.phi[1]
        du = ((U[1:] - U[:-1]) / self.h)[:, None] * np.ones_like(self.xi)
        return uq, du

    def scatter(self, flux, value) -> np.ndarray:
        """Covector r_i = sum_q w (flux * phi_i' + value * phi_i)."""
        w = self.weights
        left = (flux * self.dphi[0] + value * self.phi[0]) @ w
        right = (flux * self.dphi[1] + value * self.phi[1]) @ w
        r = np.zeros(self.N + 1)
        np.add.at(r, np.arange(self.N), left)
        np.add.at(r, np.arange(1, self.N + 1), right)
        return r[1:-1]

    def matrix(self, a, b, c) -> np.ndarray:
        """Matrix of ``v^T A u = int a u'v' + b u v' + c u v`` at quadrature arrays."""
        w = self.weights
        full = np.zeros((self.N + 1, self.N + 1))
        e = np.arange(self.N)
        for i in range(2):
            for j in range(2):
                loc = (a * self.dphi[j] * self.dphi[i] + b * self.phi[j] * self.dphi[i]
                       + c * self.phi[j] * self.phi[i]) @ w
                np.add.at(full, (e + i, e + j), loc)
        return full[1:-1, 1:-1]

    def interpolate(self, func) -> np.ndarray:
        return np.asarray(func(self.nodes[1:-1]), dtype=float)

    def coef_array(self, coef: Coefficient) -> np.ndarray:
        if isinstance(coef, Expression):
            return evaluate(coef, {"x": self.xq})
        if callable(coef):
            return np.broadcast_to(np.asarray(coef(self.xq), dtype=float), self.xq.shape).copy()
        return np.broadcast_to(np.asarray(coef, dtype=float), self.xq.shape).copy()


# --- operations -------------------------------------------------------------

def assemble_form(disc: Discretization, u, flux=None, q=None, g=None) -> np.ndarray:
    """Covector of ``int flux(x,u') v' + q(x,u) v' + g(x,u) v``; None terms are absent."""
    uq, du = disc.at_quadrature(u)
    x = disc.xq
    zero = np.zeros_like(x)
    F = flux(x, du) if flux is not None else zero
    if q is not None:
        F = F + q(x, uq)
    G = g(x, uq) if g is not None else zero
    return disc.scatter(F, G)


def assemble_residual(disc: Discretization, spec: ProblemSpec, u) -> np.ndarray:
    return assemble_form(disc, u, spec.flux, spec.qval, spec.gval)


def principal_assembler(disc: Discretization, spec: ProblemSpec, side: str):
    """Residual assembler of the principal homogeneous parts at ``side``."""
    parts = spec.principal_parts(side)
    if not parts:
        raise SpecError(f"no principal parts declared at {side}")

    def term(key):
        part = parts.get(key)
        if part is None:
            return None
        return lambda x, arg: spec.part_value(part, x, arg)

    return lambda u: assemble_form(disc, u, term("f"), term("q"), term("g"))


def assemble_linear_pencil(disc: Discretization, a: Coefficient, b: Coefficient = 0.0,
                           c: Coefficient = 0.0, label: str = "") -> OperatorPencil:
    A_ = disc.coef_array(a)
    B_ = disc.coef_array(b)
    C_ = disc.coef_array(c)
    bad = A_ <= 0
    if np.any(bad):
        k = np.argwhere(bad)[0]
        raise EllipticityError(
            f"gradient coefficient {A_[tuple(k)]:.4g} <= 0 at x = {disc.xq[tuple(k)]:.6f}")
    A = disc.matrix(A_, B_, C_)
    lower = disc.matrix(0 * A_, B_, C_)
    return OperatorPencil(A, disc.stiffness, mass=disc.mass, lower=lower, label=label)


def spec_pencil(disc: Discretization, spec: ProblemSpec, side: str) -> OperatorPencil:
    a, b, c = spec.linear_coefficients(side, disc.xq)
    return assemble_linear_pencil(disc, a, b, c, label=side)


@dataclass(frozen=True)
class Alignment:
    pencil: OperatorPencil
    shift: float
    relative_distance: float
    mode: int
    kernel_dim: int


def resonance_align(pencil: OperatorPencil, which: Optional[int] = None,
                    multiplicity: int = 1, tol: float = DEFAULT_KERNEL_TOL) -> Alignment:
    """Shift A by the discrete eigenvalue of ``A u = mu M u`` nearest 0 (or mode ``which``).

    The shift must be small relative to the size of the zeroth-order part it
    corrects (5%); otherwise the resonance was misdeclared.
    """
    if pencil.mass is None:
        raise FEMError("pencil carries no mass matrix")
    A, M = pencil.A, pencil.mass
    if pencil.symmetric:
        mu, V = sla.eigh(A, M)
        mu = mu.astype(complex)
    else:
        mu, V = sla.eig(A, M)
    real = np.abs(mu.imag) <= 1e-8 * np.abs(mu).max()
    idx = np.flatnonzero(real)
    if idx.size == 0:
        raise MisdeclaredResonanceError("no real discrete eigenvalue")
    idx = idx[np.argsort(mu[idx].real)]
    if which is None:
        k = idx[np.argmin(np.abs(mu[idx].real))]
        mode = int(np.flatnonzero(idx == k)[0]) + 1
    else:
        if not 1 <= which <= idx.size:
            raise MisdeclaredResonanceError(f"mode {which} out of range")
        k = idx[which - 1]
        mode = which
    shift = float(mu[k].real)
    v = np.real_if_close(V[:, k])
    v = np.real(v)
    lower = pencil.lower if pencil.lower is not None else np.zeros_like(A)
    sigma = abs(v @ lower @ v) / (v @ M @ v)
    if shift == 0.0:
        rel = 0.0
    else:
        rel = math.inf if sigma == 0 else abs(shift) / sigma
    if rel > ALIGN_REL_TOL:
        raise MisdeclaredResonanceError(
            f"nearest discrete eigenvalue {shift:.6g} is {100 * rel:.1f}% away from resonance "
            f"(limit {100 * ALIGN_REL_TOL:.0f}%)")
    A2 = A - shift * M
    out = OperatorPencil(A2, pencil.K, mass=M, lower=lower - shift * M, label=pencil.label)
    L = np.linalg.cholesky(pencil.K)
    B = sla.solve_triangular(L, sla.solve_triangular(L, A2, lower=True).T, lower=True).T
    dim = kernel_basis(B, tol).shape[1]
    if dim != multiplicity:
        raise MisdeclaredResonanceError(
            f"aligned kernel has dimension {dim}, declared multiplicity {multiplicity}")
    return Alignment(out, shift, rel, mode, dim)


def embedding_constant(disc: Discretization) -> float:
    """Norm of the embedding of H^1_0 into L^2 on the mesh, 1/sqrt(lambda_min)."""
    lam = sla.eigh(disc.stiffness, disc.mass, eigvals_only=True, subset_by_index=[0, 0])
    return float(1.0 / math.sqrt(lam[0]))


def pencil_eigenvalues(disc: Discretization, k: int) -> np.ndarray:
    """First k discrete Dirichlet eigenvalues of -u''."""
    return sla.eigh(disc.stiffness, disc.mass, eigvals_only=True, subset_by_index=[0, k - 1])


def probe_values() -> np.ndarray:
    lin = np.linspace(-10.0, 10.0, 41)
    small = 2.0 ** -np.arange(0, 21)
    return np.unique(np.concatenate([lin, small, -small, [0.0]]))


def monotonicity_probe(spec: ProblemSpec, sample_count: int = 1000) -> float:
    """Grid minimum of (f(x,xi) - f(x,eta)) / (xi - eta) over xi != eta in [-10, 10]."""
    if sample_count < 1000:
        raise ValueError("sample_count must be at least 1000")
    vals = probe_values()
    XI, ETA = np.meshgrid(vals, vals, indexing="ij")
    mask = XI != ETA
    xi, eta = XI[mask], ETA[mask]
    nx = max(2, math.ceil(sample_count / xi.size))
    xs = np.linspace(0.0, 1.0, nx)
    X = np.repeat(xs, xi.size)
    XI = np.tile(xi, nx)
    ETA = np.tile(eta, nx)
    quot = (spec.flux(X, XI) - spec.flux(X, ETA)) / (XI - ETA)
    return float(quot.min())


def dirichlet_zero_check(spec: ProblemSpec, disc: Optional[Discretization] = None) -> bool:
    disc = disc or Discretization(spec.n_elements)
    x = disc.xq
    z = np.zeros_like(x)
    return bool(max(np.abs(spec.flux(x, z)).max(), np.abs(spec.qval(x, z)).max(),
                    np.abs(spec.gval(x, z)).max()) <= 1e-12)


def fd_jacobian(residual, u, step: float, bandwidth: Optional[int] = None) -> np.ndarray:
    """Central-difference Jacobian, column by column.

    With ``bandwidth`` b, columns at distance > 2b share one perturbation
    (their residual supports do not overlap).
    """
    u = np.asarray(u, dtype=float)
    n = u.size
    J = np.zeros((n, n))
    if bandwidth is None:
        for j in range(n):
            e = np.zeros(n)
            e[j] = step
            J[:, j] = (residual(u + e) - residual(u - e)) / (2 * step)
        return J
    stride = 2 * bandwidth + 1
    rows = np.arange(n)
    for color in range(min(stride, n)):
        cols = np.arange(color, n, stride)
        e = np.zeros(n)
        e[cols] = step
        diff = (residual(u + e) - residual(u - e)) / (2 * step)
        owner = color + stride * np.round((rows - color) / stride).astype(int)
        ok = (np.abs(rows - owner) <= bandwidth) & (owner >= 0) & (owner < n)
        J[rows[ok], owner[ok]] = diff[ok]
    return J


def linearization_defect(disc: Discretization, spec: ProblemSpec) -> float:
    """Mismatch between the declared zero-side pencil and the central-difference
    Jacobian of the residual at u = 0, in units of ||M_h||.

    Measuring against the mass scale makes an O(1) error in a lower-order
    coefficient show up as O(1) instead of being swamped by the stiffness.
    """
    A = spec_pencil(disc, spec, "zero").A
    J = fd_jacobian(lambda u: assemble_residual(disc, spec, u), np.zeros(disc.n), 1e-6, bandwidth=1)
    return float(np.linalg.norm(J - A, 2) / np.linalg.norm(disc.mass, 2))


ASYMPTOTIC_AMPLITUDES = (1e2, 1e3, 1e4)


def remainder_ratios(spec: ProblemSpec, which: str, xs: Optional[np.ndarray] = None,
                     order: Optional[float] = None) -> list:
    """max_x |h(x,t) - h'(x,inf) t - h^k(x,t)| / |t|^k for t in 1e2, 1e3, 1e4 (both signs).

    ``which`` is one of "f", "q", "g"; ``order`` defaults to the order of the
    declared part (0 when there is none).
    """
    xs = np.linspace(0.0, 1.0, 33) if xs is None else xs
    part = {"f": spec.fk, "q": spec.qk, "g": spec.gk}[which]
    if order is not None:
        k = order
    else:
        k = part.decl.order if part is not None else 0.0
    out = []
    for T in ASYMPTOTIC_AMPLITUDES:
        worst = 0.0
        for t in (T, -T):
            tt = np.full_like(xs, t)
            if which == "f":
                a = spec.eval_x(spec.fprimeInf, xs) if spec.fprimeInf is not None else spec.eval_x(spec.p, xs)
                val = spec.flux(xs, tt) - a * tt
            elif which == "q":
                val = spec.qval(xs, tt) - spec.eval_x(spec.qprimeInf, xs, 0.0 * xs) * tt
            else:
                val = spec.gval(xs, tt) - spec.eval_x(spec.gprimeInf, xs) * tt
            val = val - spec.part_value(part, xs, tt)
            worst = max(worst, float(np.abs(val).max()) / T ** k)
        out.append(worst)
    return out


def ratios_decreasing(r) -> bool:
    if all(v == 0 for v in r):
        return True
    return all(r[i + 1] <= r[i] * (1 + 1e-12) for i in range(len(r) - 1)) and r[-1] < r[0]
