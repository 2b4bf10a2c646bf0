"""Independent solution finders used to confirm verdicts.

Shooting integrates the classical form ``p u'' = g(x, u)`` with RK4 and
brackets ``u(1) = 0`` in the initial slope; the Newton finder runs damped
Newton on the assembled Galerkin residual from structured and random starts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg as sla
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq

from .exprlang import compile_function
from .fem1d import Discretization, ProblemSpec, assemble_residual, fd_jacobian
from .numerics import damped_newton

RK4_STEPS = 10_000
DIVERGENCE_BOUND = 1e12
DISTINCT_RADIUS = 1e-4
NONTRIVIAL_NORM = 1e-2


class DivergenceError(ArithmeticError):
    pass


class NotClassicalError(ValueError):
    pass


@dataclass(frozen=True)
class Solution:
    u: np.ndarray
    residual: float
    max_norm: float
    slope: Optional[float] = None

    def summary(self) -> dict:
        out = {"max_norm": self.max_norm, "residual": self.residual}
        if self.slope is not None:
            out["slope"] = self.slope
        return out


@dataclass
class SolutionSet:
    solutions: list
    method: str
    radius: float = DISTINCT_RADIUS
    starts: int = 0
    converged: int = 0
    meta: dict = field(default_factory=dict)

    def nontrivial(self, threshold: float = NONTRIVIAL_NORM) -> list:
        return [s for s in self.solutions if s.max_norm > threshold]

    def summary(self) -> dict:
        return {
            "method": self.method, "starts": self.starts, "converged": self.converged,
            "count": len(self.solutions), "nontrivial_count": len(self.nontrivial()),
            "solutions": [s.summary() for s in self.solutions], **self.meta,
        }


def _canonical(solutions: list, radius: float) -> list:
    """Sort by max-norm then lexicographically and drop near-duplicates."""
    ordered = sorted(solutions, key=lambda s: (round(s.max_norm, 12), tuple(np.round(s.u, 12))))
    kept = []
    for s in ordered:
        if all(np.abs(s.u - k.u).max() > radius for k in kept):
            kept.append(s)
    return kept


# --- shooting -----------------------------------------------------------------

def _classical(spec: ProblemSpec):
    xs = np.linspace(0.0, 1.0, 17)
    if spec.f is not None:
        raise NotClassicalError("shooting needs the linear flux p*u'")
    p = np.atleast_1d(spec.eval_x(spec.p, xs))
    if np.ptp(p) > 1e-14 * abs(p[0]) or p[0] <= 0:
        raise NotClassicalError("shooting needs a positive constant p")
    tt = np.linspace(-5.0, 5.0, 11)
    X, TT = np.meshgrid(xs, tt)
    if np.abs(spec.qval(X, TT)).max() > 0:
        raise NotClassicalError("shooting needs q = 0")
    names = ("x", "t") + tuple(sorted(spec.parameters))
    g = compile_function(spec.g, names)
    extra = tuple(spec.parameters[k] for k in sorted(spec.parameters))
    return float(p[0]), (lambda x, t: g(x, t, *extra))


def _rk4(g, p, s, steps, keep=False):
    h = 1.0 / steps
    u, v, x = 0.0 * s, s, 0.0
    path = [(u, v)] if keep else None
    for i in range(steps):
        k1u, k1v = v, g(x, u) / p
        k2u, k2v = v + 0.5 * h * k1v, g(x + 0.5 * h, u + 0.5 * h * k1u) / p
        k3u, k3v = v + 0.5 * h * k2v, g(x + 0.5 * h, u + 0.5 * h * k2u) / p
        k4u, k4v = v + h * k3v, g(x + h, u + h * k3u) / p
        u = u + h / 6.0 * (k1u + 2 * k2u + 2 * k3u + k4u)
        v = v + h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
        x = (i + 1) * h
        if keep:
            path.append((u, v))
        if np.ndim(u) == 0 and abs(u) > DIVERGENCE_BOUND:
            raise DivergenceError(f"|u| exceeded {DIVERGENCE_BOUND:g} at x = {x:.4f}")
    return u, path


def shoot(spec: ProblemSpec, slope: float, steps: int = RK4_STEPS) -> float:
    """u(1) for ``p u'' = g(x,u)``, ``u(0) = 0``, ``u'(0) = slope``."""
    p, g = _classical(spec)
    u, _ = _rk4(g, p, float(slope), steps)
    return float(u)


def shoot_profile(spec: ProblemSpec, slope: float, nodes: np.ndarray, steps: int = RK4_STEPS) -> np.ndarray:
    p, g = _classical(spec)
    _, path = _rk4(g, p, float(slope), steps, keep=True)
    path = np.array(path)
    xs = np.linspace(0.0, 1.0, steps + 1)
    dudx = path[:, 1]
    return CubicHermiteSpline(xs, path[:, 0], dudx)(nodes)


def _scan(g, p, slopes, steps):
    # Diverging shots turn into inf/nan and are masked afterwards.
    with np.errstate(all="ignore"):
        u, _ = _rk4(g, p, slopes.astype(float), steps)
    return np.where(np.abs(u) > DIVERGENCE_BOUND, np.nan, u)


def find_solutions_shooting(spec: ProblemSpec, s_range=(-20.0, 20.0), grid: int = 401,
                            n_elements: Optional[int] = None, steps: int = RK4_STEPS) -> SolutionSet:
    p, g = _classical(spec)
    slopes = np.linspace(s_range[0], s_range[1], grid)
    ends = _scan(g, p, slopes, steps)
    roots = []
    for i in range(grid):
        if ends[i] == 0.0:
            roots.append(slopes[i])
    for i in range(grid - 1):
        a, b = ends[i], ends[i + 1]
        if np.isfinite(a) and np.isfinite(b) and a * b < 0:
            f = lambda s: shoot(spec, s, steps)
            try:
                roots.append(brentq(f, slopes[i], slopes[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps,
                                    maxiter=200))
            except (DivergenceError, ValueError, RuntimeError):
                continue
    n_el = n_elements or spec.n_elements
    nodes = np.arange(1, n_el) / n_el
    sols = []
    for s in roots:
        end = shoot(spec, s, steps)
        if abs(end) > 1e-10:
            continue
        u = shoot_profile(spec, s, nodes, steps)
        sols.append(Solution(u, abs(end), float(np.abs(u).max(initial=0.0)), float(s)))
    kept = _canonical(sols, DISTINCT_RADIUS)
    return SolutionSet(kept, "shooting", DISTINCT_RADIUS, starts=grid, converged=len(sols),
                       meta={"s_range": list(map(float, s_range)), "brackets": len(roots)})


# --- Newton -----------------------------------------------------------------

POLISH_ITER = 60


def newton_starts(disc: Discretization, count: int, seed: int) -> list:
    n = disc.n
    starts = [np.zeros(n)]
    _, vecs = sla.eigh(disc.stiffness, disc.mass, subset_by_index=[0, min(3, n) - 1])
    for k in range(vecs.shape[1]):
        v = vecs[:, k] / np.abs(vecs[:, k]).max()
        for amp in (0.1, 1.0, 10.0):
            starts.extend([amp * v, -amp * v])
    rng = np.random.default_rng(seed)
    for _ in range(count):
        v = rng.standard_normal(n)
        starts.append(rng.uniform(0.1, 10.0) * v / np.abs(v).max())
    return starts


def find_solutions_newton(spec: ProblemSpec, disc: Optional[Discretization] = None,
                          starts: int = 8, seed: int = 0, max_iter: int = 100) -> SolutionSet:
    disc = disc or Discretization(spec.n_elements)
    Knorm = disc.stiffness_norm

    def F(u):
        return assemble_residual(disc, spec, u)

    def jac(u):
        step = 1e-6 * (1.0 + np.abs(u).max(initial=0.0))
        return fd_jacobian(F, u, step, bandwidth=1)

    def tol(u):
        return 1e-8 * (1.0 + Knorm * np.linalg.norm(u))

    sols = []
    init = newton_starts(disc, starts, seed)
    for u0 in init:
        u, rn, ok = damped_newton(F, u0, jac, tol=tol, max_iter=max_iter, max_halvings=30)
        if ok:
            # Keep iterating while the residual still drops: near a degenerate
            # zero convergence is only linear and the first accepted iterate
            # can sit well away from the limit.
            u2, rn2, _ = damped_newton(F, u, jac, tol=lambda _u: 0.0, max_iter=POLISH_ITER,
                                       max_halvings=30)
            if rn2 <= rn:
                u, rn = u2, rn2
            sols.append(Solution(u, float(rn), float(np.abs(u).max(initial=0.0))))
    kept = _canonical(sols, DISTINCT_RADIUS)
    return SolutionSet(kept, "newton", DISTINCT_RADIUS, starts=len(init), converged=len(sols),
                       meta={"seed": seed, "n_elements": disc.N})


def residual_bound(disc: Discretization, u) -> float:
    return 1e-8 * (1.0 + disc.stiffness_norm * np.linalg.norm(u))


def set_distance(a: SolutionSet, b: SolutionSet) -> float:
    """Hausdorff distance between two solution sets in the mesh max-norm."""
    if not a.solutions or not b.solutions:
        return 0.0 if not a.solutions and not b.solutions else np.inf

    def one_way(x, y):
        return max(min(np.abs(s.u - t.u).max() for t in y.solutions) for s in x.solutions)
    return float(max(one_way(a, b), one_way(b, a)))


def sets_agree(a: SolutionSet, b: SolutionSet, tol: float = 1e-3) -> bool:
    """Every solution of each set has a partner in the other within ``tol`` (max-norm)."""
    def covered(x, y):
        return all(any(np.abs(s.u - t.u).max() <= tol for t in y.solutions) for s in x.solutions)
    return covered(a, b) and covered(b, a)
