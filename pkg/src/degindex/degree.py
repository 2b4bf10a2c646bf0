"""Brouwer degree of continuous maps on balls centred at the origin.

Dimensions 1 and 2 are exact: the sign formula and an adaptive winding
number. Higher dimensions fall back to counting regular preimages of a small
perturbed value with multi-start Newton, flagged as heuristic.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .numerics import damped_newton

BOUNDARY_TOL = 1e-12
SPHERE_TOL = 1e-10
MAX_SEGMENTS = 2 ** 20
INITIAL_SEGMENTS = 128


class DegreeError(ArithmeticError):
    pass


class BoundaryZeroError(DegreeError):
    """The map (nearly) vanishes on the boundary of the ball."""


class SphereZeroError(BoundaryZeroError):
    """A homogeneous map vanishes somewhere on the unit sphere."""


class RefinementLimitError(DegreeError):
    pass


class DegenerateZeroError(DegreeError):
    pass


@dataclass(frozen=True)
class FiniteMap:
    """A map R^d -> R^d given by a function of a length-d array."""

    dim: int
    func: Callable[[np.ndarray], np.ndarray]
    order: Optional[float] = None
    odd: bool = False
    name: str = ""

    def __call__(self, u) -> np.ndarray:
        out = np.asarray(self.func(np.asarray(u, dtype=float)), dtype=float).reshape(self.dim)
        return out


@dataclass(frozen=True)
class DegreeResult:
    value: int
    heuristic: bool = False
    roots: tuple = ()

    def __int__(self):
        return self.value


def _as_map(F, dim: int) -> FiniteMap:
    if isinstance(F, FiniteMap):
        if F.dim != dim:
            raise ValueError(f"expected a map of dimension {dim}, got {F.dim}")
        return F
    return FiniteMap(dim, F)


def degree_1d(F, radius: float = 1.0) -> int:
    F = _as_map(F, 1)
    lo = float(F([-radius])[0])
    hi = float(F([radius])[0])
    if abs(lo) < BOUNDARY_TOL or abs(hi) < BOUNDARY_TOL:
        raise BoundaryZeroError(f"map vanishes at the boundary: F(-r)={lo:.3e}, F(r)={hi:.3e}")
    return int((np.sign(hi) - np.sign(lo)) // 2)


def degree_2d_winding(F, radius: float = 1.0, refinement_limit: int = MAX_SEGMENTS) -> int:
    """Winding number of theta -> F(r cos theta, r sin theta) around 0.

    A parameter interval is accepted once both of its halves turn by less
    than pi/4 (so the interval turns by less than pi/2 and the midpoint rules
    out aliasing of a full turn between the endpoints); otherwise it is
    bisected. More than ``refinement_limit`` segments raises
    RefinementLimitError.
    """
    F = _as_map(F, 2)

    def angle_at(theta):
        v = F([radius * math.cos(theta), radius * math.sin(theta)])
        n = math.hypot(v[0], v[1])
        if not n >= BOUNDARY_TOL:
            raise BoundaryZeroError(f"|F| = {n:.3e} on the boundary at theta = {theta:.6f}")
        return math.atan2(v[1], v[0])

    def wrap(d):
        return (d + math.pi) % (2 * math.pi) - math.pi

    grid = np.linspace(0.0, 2 * math.pi, INITIAL_SEGMENTS + 1)
    angles = [angle_at(t) for t in grid[:-1]]
    angles.append(angles[0])
    stack = [(grid[i], angles[i], grid[i + 1], angles[i + 1]) for i in range(INITIAL_SEGMENTS)]
    segments = INITIAL_SEGMENTS
    total = 0.0
    while stack:
        a, fa, b, fb = stack.pop()
        m = 0.5 * (a + b)
        fm = angle_at(m)
        d1, d2 = wrap(fm - fa), wrap(fb - fm)
        if abs(d1) < math.pi / 4 and abs(d2) < math.pi / 4:
            total += d1 + d2
            continue
        segments += 1
        if segments > refinement_limit or b - a < 1e-15:
            raise RefinementLimitError(
                f"turning bound not met after {segments} segments; F is too close to 0 on the boundary")
        stack.append((a, fa, m, fm))
        stack.append((m, fm, b, fb))
    return int(round(total / (2 * math.pi)))


def sphere_samples(dim: int, count: int, seed: int = 0) -> np.ndarray:
    """Deterministic points on the unit sphere in R^dim."""
    if dim == 1:
        return np.array([[-1.0], [1.0]])
    if dim == 2:
        th = 2 * math.pi * np.arange(count) / count
        return np.column_stack([np.cos(th), np.sin(th)])
    rng = np.random.default_rng(seed)
    pts = rng.standard_normal((count, dim))
    axes = np.vstack([np.eye(dim), -np.eye(dim)])
    pts = np.vstack([axes, pts])
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


def central_jacobian(F, u: np.ndarray, h: float) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    d = u.size
    J = np.empty((d, d))
    for j in range(d):
        e = np.zeros(d)
        e[j] = h
        J[:, j] = (np.asarray(F(u + e)) - np.asarray(F(u - e))) / (2 * h)
    return J


def degree_nd_regular(F, radius: float = 1.0, grid: int = 5, h: Optional[float] = None,
                      seed: int = 0, dim: Optional[int] = None) -> DegreeResult:
    """Degree as the signed count of preimages of a small regular value.

    For d <= 2 the exact engines decide the value and the flag is cleared.
    """
    if dim is None:
        dim = F.dim if isinstance(F, FiniteMap) else None
    if dim is None:
        raise ValueError("dimension unknown")
    F = _as_map(F, dim)
    if dim == 1:
        return DegreeResult(degree_1d(F, radius))
    if dim == 2:
        return DegreeResult(degree_2d_winding(F, radius))
    if h is None:
        h = 1e-6 * radius

    boundary = radius * sphere_samples(dim, 2000, seed)
    bvals = np.array([np.linalg.norm(F(p)) for p in boundary])
    m_b = float(bvals.min())
    if m_b < SPHERE_TOL:
        raise BoundaryZeroError(f"min |F| on the sampled boundary is {m_b:.3e}")
    rng = np.random.default_rng(seed)
    direction = rng.standard_normal(dim)
    y = 1e-3 * m_b * direction / np.linalg.norm(direction)

    def G(u):
        return F(u) - y

    axis = np.linspace(-radius, radius, grid)
    starts = [np.zeros(dim)]
    for p in itertools.product(axis, repeat=dim):
        p = np.array(p)
        if np.linalg.norm(p) < radius:
            starts.append(p)
    tol_res = 1e-10 * m_b
    roots = []
    for s in starts:
        x, _, ok = damped_newton(G, s, lambda u: central_jacobian(F, u, h),
                                 tol=lambda _u: tol_res, max_iter=100)
        if ok and np.linalg.norm(x) < radius:
            if all(np.linalg.norm(x - r) > 1e-6 * radius for r in roots):
                roots.append(x)
    roots.sort(key=tuple)
    scale = (m_b / radius) ** dim
    total = 0
    for r in roots:
        det = np.linalg.det(central_jacobian(F, r, h))
        if abs(det) < 1e-10 * scale:
            raise DegenerateZeroError(f"near-singular Jacobian (det {det:.3e}) at {r}")
        total += int(np.sign(det))
    return DegreeResult(total, heuristic=True, roots=tuple(tuple(r) for r in roots))


def degree_homogeneous(F, dim: Optional[int] = None, sphere_count: int = 360) -> DegreeResult:
    """Degree at 0 of a positively homogeneous map nonvanishing on the sphere."""
    if dim is None:
        dim = F.dim if isinstance(F, FiniteMap) else None
    if dim is None:
        raise ValueError("dimension unknown")
    F = _as_map(F, dim)
    pts = sphere_samples(dim, max(sphere_count, 360) if dim >= 2 else 2)
    norms = np.array([np.linalg.norm(F(p)) for p in pts])
    k = int(np.argmin(norms))
    if norms[k] < SPHERE_TOL:
        raise SphereZeroError(
            f"map vanishes on the unit sphere: |F| = {norms[k]:.3e} at {pts[k].tolist()}")
    if dim == 1:
        return DegreeResult(degree_1d(F, 1.0))
    if dim == 2:
        return DegreeResult(degree_2d_winding(F, 1.0))
    return degree_nd_regular(F, 1.0)
