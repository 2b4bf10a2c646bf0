"""Acceptance criteria as plain functions.

Shared by ``degindex selftest`` and the pytest acceptance suite. Every
criterion returns a :class:`CriterionResult`; comparisons go through a
:class:`Checker` so that a tolerance can be deliberately corrupted (self-test
hook) and the failure is reported by name.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import catalog, oracle, verdicts
from .degree import (
    BoundaryZeroError, degree_1d, degree_2d_winding, degree_nd_regular,
)
from .fem1d import Discretization, embedding_constant, pencil_eigenvalues, resonance_align, spec_pencil
from .reduction import OperatorPencil, analyze_pencil, build_reduced_map, index_at_zero


@dataclass
class CriterionResult:
    id: str
    title: str
    passed: bool
    details: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        tail = "" if self.passed else " :: " + "; ".join(self.failures)
        return f"[{status}] {self.id} {self.title} ({self.seconds:.2f}s){tail}"


class Checker:
    """Collects named comparisons; a corrupted checker makes every tolerance negative."""

    def __init__(self, corrupt: bool = False):
        self.corrupt = corrupt
        self.failures = []
        self.details = {}

    def _tol(self, tol: float) -> float:
        return -1.0 if self.corrupt else tol

    def within(self, name: str, err: float, tol: float) -> bool:
        ok = bool(np.isfinite(err) and err <= self._tol(tol))
        self.details[name] = {"error": float(err), "tolerance": tol}
        if not ok:
            self.failures.append(f"{name}: {err:.3e} > {tol:.1e}")
        return ok

    def equal(self, name: str, got, want) -> bool:
        ok = got == want and not self.corrupt
        self.details[name] = {"got": got, "expected": want}
        if not ok:
            self.failures.append(f"{name}: got {got!r}, expected {want!r}")
        return ok

    def true(self, name: str, cond: bool, **info) -> bool:
        ok = bool(cond) and not self.corrupt
        self.details[name] = {"ok": bool(cond), **info}
        if not ok:
            self.failures.append(f"{name} {info}" if info else name)
        return ok


# --- finite-dimensional catalog -------------------------------------------------

def _cube(i):
    def C(u):
        out = np.zeros(2)
        out[i] = u[0] ** 3
        return out
    return C


def _neg_cube(u):
    return np.array([-u[0] ** 3, 0.0])


FINITE_CASES = {
    "diag(0,1), C=(u1^3,0)": (np.diag([0.0, 1.0]), _cube(0)),
    "diag(0,1), C=(-u1^3,0)": (np.diag([0.0, 1.0]), _neg_cube),
    "jordan [[0,1],[0,0]], C=(0,u1^3)": (np.array([[0.0, 1.0], [0.0, 0.0]]), _cube(1)),
    "diag(-1,1), C=(u1^3,0)": (np.diag([-1.0, 1.0]), _cube(0)),
}


def finite_index(A, C, completion=None):
    pencil = OperatorPencil(A, np.eye(A.shape[0]))
    st = analyze_pencil(pencil, completion=completion)
    theta = build_reduced_map(st, pencil, C, 3.0, "odd") if st.l else None
    return index_at_zero(st, theta), st


def direct_degree(A, C, radius=0.1):
    return degree_2d_winding(lambda u: A @ u + C(u), radius)


# --- criteria ---------------------------------------------------------------------

def c1_degree_axioms(ck: Checker):
    ck.equal("identity d=1", degree_1d(lambda u: u), 1)
    ck.equal("identity d=2", degree_2d_winding(lambda u: u), 1)
    ck.equal("identity d=3", degree_nd_regular(lambda u: u, dim=3).value, 1)
    ck.equal("-identity d=1", degree_1d(lambda u: -u), -1)
    ck.equal("-identity d=2", degree_2d_winding(lambda u: -u), 1)
    ck.equal("-identity d=3", degree_nd_regular(lambda u: -u, dim=3).value, -1)
    ck.equal("complex square", degree_2d_winding(lambda u: np.array([u[0] ** 2 - u[1] ** 2, 2 * u[0] * u[1]])), 2)
    ck.equal("complex cube", degree_2d_winding(
        lambda u: np.array([u[0] ** 3 - 3 * u[0] * u[1] ** 2, 3 * u[0] ** 2 * u[1] - u[1] ** 3])), 3)

    rng = np.random.default_rng(1)
    monos = [(1, 0), (0, 1), (3, 0), (2, 1), (1, 2), (0, 3)]
    odd_degrees = []
    while len(odd_degrees) < 20:
        coef = rng.standard_normal((2, len(monos)))

        def F(u, coef=coef):
            basis = np.array([u[0] ** a * u[1] ** b for a, b in monos])
            return coef @ basis
        try:
            odd_degrees.append(degree_2d_winding(F))
        except BoundaryZeroError:
            continue
    ck.true("Borsuk parity on 20 odd maps", all(d % 2 == 1 for d in odd_degrees), degrees=odd_degrees)

    mism = 0
    for _ in range(50):
        while True:
            M = rng.standard_normal((2, 2))
            if abs(np.linalg.det(M)) > 1e-3:
                break
        if degree_2d_winding(lambda u, M=M: M @ u) != int(np.sign(np.linalg.det(M))):
            mism += 1
    ck.equal("linear maps: degree = sign det (mismatches of 50)", mism, 0)


def c2_index_vs_degree(ck: Checker):
    for name, (A, C) in FINITE_CASES.items():
        res, _ = finite_index(A, C)
        ck.equal(f"{name}: index vs winding degree", res.value, direct_degree(A, C))
    A, C = FINITE_CASES["jordan [[0,1],[0,0]], C=(0,u1^3)"]
    ck.equal("jordan index", finite_index(A, C)[0].value, -1)
    a, sa = finite_index(A, C)
    b, sb = finite_index(A, C, completion=np.array([[3.0], [-2.0]]))
    ck.true("completions differ", not np.allclose(sa.T, sb.T), Ta=sa.T.tolist(), Tb=sb.T.tolist())
    ck.equal("jordan index under a second completion", b.value, a.value)


def _catalog_structures():
    out = {}
    for name, (A, C) in FINITE_CASES.items():
        out[name] = finite_index(A, C)[1]
    A, C = FINITE_CASES["jordan [[0,1],[0,0]], C=(0,u1^3)"]
    out["jordan, supplied completion"] = finite_index(A, C, np.array([[3.0], [-2.0]]))[1]
    disc = Discretization(100)
    for name in catalog.PROBLEMS:
        sp = catalog.spec(name)
        if sp.tune:
            sp = verdicts.tuned_spec(sp, disc)
        for side in ("zero", "infinity"):
            try:
                pencil = spec_pencil(disc, sp, side)
            except Exception:
                continue
            resonant = sp.resonant_at_zero if side == "zero" else sp.resonant_at_infinity
            if resonant:
                pencil = resonance_align(pencil).pencil
            out[f"{name}/{side}"] = analyze_pencil(pencil)
    return out


def c3_t_residual(ck: Checker):
    for name, st in _catalog_structures().items():
        if st.n0 == 0:
            continue
        ck.within(f"{name}: |T N - P0 P1|", st.t_residual, 1e-8)
        ck.true(f"{name}: det T != 0", st.t_determinant != 0.0, det=st.t_determinant)


def c4_discrete_spectrum(ck: Checker):
    t0 = time.perf_counter()
    disc = Discretization(200)
    lam = pencil_eigenvalues(disc, 5)
    for k in range(1, 6):
        ck.within(f"lambda_{k} relative error", abs(lam[k - 1] / (k * np.pi) ** 2 - 1), 1e-3)
    ck.within("K_emb relative error", abs(embedding_constant(disc) * np.pi - 1), 1e-3)
    ck.within("runtime seconds", time.perf_counter() - t0, 5.0)


def _best_residual(sols: oracle.SolutionSet) -> float:
    return min((s.residual for s in sols.solutions), default=np.inf)


def c5_resonant_solvability(ck: Checker):
    conclusions = {}
    for n in (100, 200):
        v = verdicts.solv_resonant(catalog.spec("landesman-lazer", n))
        conclusions[n] = v.conclusion
        ind = v.indices.get("infinity")
        ck.equal(f"N={n}: ind(inf)", None if ind is None else ind.value, 1)
    ck.equal("conclusion at N=100", conclusions[100], verdicts.SOLVABLE)
    ck.equal("conclusion identical at N=100 and N=200", conclusions[200], conclusions[100])
    sols = oracle.find_solutions_newton(catalog.spec("landesman-lazer"), Discretization(100))
    ck.within("Newton residual", _best_residual(sols), 1e-8)


def c6_coercive_solvability(ck: Checker):
    sp = catalog.spec("coercive")
    v = verdicts.solv_coercive(sp)
    ck.equal("conclusion", v.conclusion, verdicts.SOLVABLE)
    ck.equal("ind(inf)", v.indices["infinity"].value if "infinity" in v.indices else None, 1)
    sols = oracle.find_solutions_newton(sp, Discretization(100))
    ck.within("Newton residual", _best_residual(sols), 1e-8)
    ck.true("u = 0 is not among the solutions", all(s.max_norm > 1e-2 for s in sols.solutions))


def c7_parity(ck: Checker):
    sp = catalog.spec("parity")
    v = verdicts.nontrivial_parity(sp)
    ck.equal("nu_0", v.spectra.get("zero", {}).get("nu"), 0)
    ck.equal("nu_inf", v.spectra.get("infinity", {}).get("nu"), 1)
    ck.equal("conclusion", v.conclusion, verdicts.NONTRIVIAL)
    shot = oracle.find_solutions_shooting(sp, (-20.0, 20.0))
    nontriv = shot.nontrivial()
    ck.true("shooting finds >= 2 nontrivial solutions", len(nontriv) >= 2, count=len(nontriv))
    ck.within("worst |u(1)| after bisection", max((s.residual for s in nontriv), default=np.inf), 1e-10)
    newton = oracle.find_solutions_newton(sp, Discretization(sp.n_elements))
    dist = oracle.set_distance(shot, newton)
    ck.within("shooting vs Newton max-norm distance", dist, 1e-3)


def c8_double_degenerate(ck: Checker):
    disc = Discretization(100)
    quad = float(np.sum(disc.weights * np.sin(np.pi * disc.xq) ** 4))
    ck.within("quadrature of sin^4(pi x) vs 3/8", abs(quad - 0.375), 1e-6)

    sp = catalog.spec("double-degenerate")
    pencil = resonance_align(spec_pencil(disc, sp, "zero")).pencil
    st = analyze_pencil(pencil)
    from .fem1d import principal_assembler
    theta = build_reduced_map(st, pencil, principal_assembler(disc, sp, "zero"), 3.0, "odd")
    # K-normalised first mode is approximately (sqrt(2)/pi) sin(pi x)
    scale = (np.sqrt(2) / np.pi) ** 4
    for c in (1.0, -1.0, 2.0):
        ck.within(f"Theta({c:g}) / (c^3 * 3/8 * scale) - 1",
                  abs(theta(np.array([c]))[0] / (c ** 3 * 0.375 * scale) - 1), 1e-3)

    v = verdicts.nontrivial_double_degenerate(sp, disc)
    i0 = v.indices.get("zero")
    iinf = v.indices.get("infinity")
    ck.true("ind(0) = +-1", i0 is not None and abs(i0.value) == 1, value=None if i0 is None else i0.value)
    ck.equal("ind(inf)", None if iinf is None else iinf.value, 0)
    ck.equal("conclusion", v.conclusion, verdicts.NONTRIVIAL)
    sols = oracle.find_solutions_newton(sp, disc)
    ck.true("Newton finds a nontrivial solution", len(sols.nontrivial()) >= 1,
            max_norms=[s.max_norm for s in sols.solutions])


def _zero_index_sum(coef) -> tuple:
    p = np.poly1d(coef)
    dp = p.deriv()
    roots = np.roots(coef)
    real = np.sort(roots[np.abs(roots.imag) < 1e-9].real)
    signs = [int(np.sign(dp(r))) for r in real]
    if any(s == 0 for s in signs):
        raise ValueError("degenerate zero")
    R = 1.0 + np.abs(np.asarray(coef[1:]) / coef[0]).max()
    return sum(signs), degree_1d(lambda u: np.atleast_1d(p(u[0])), 2 * R)


def c9_kronecker(ck: Checker):
    s, inf = _zero_index_sum([-1.0, 0.0, 1.0, 0.0])
    ck.equal("u - u^3: sum of zero indices vs index at infinity", s, inf)
    rng = np.random.default_rng(9)
    done = 0
    while done < 5:
        coef = rng.standard_normal(4)
        roots = np.roots(coef)
        real = roots[np.abs(roots.imag) < 1e-9].real
        if abs(coef[0]) < 0.1 or (real.size > 1 and np.min(np.diff(np.sort(real))) < 1e-3):
            continue
        s, inf = _zero_index_sum(coef)
        ck.equal(f"random cubic {done + 1}", s, inf)
        done += 1


def c10_determinism(ck: Checker):
    from .cli import analyze_config, dumps_machine
    config = {"problem": catalog.problem("parity"), "mesh": {"n_elements": 60},
              "analysis": {"theorems": "auto", "verify_with_oracle": True,
                           "oracle": {"method": "newton", "starts": 4, "seed": 7}}}
    first = dumps_machine(analyze_config(config).machine)
    second = dumps_machine(analyze_config(config).machine)
    ck.true("machine sections byte-identical", first == second, bytes=len(first))


CRITERIA = [
    ("c1", "degree axioms", c1_degree_axioms),
    ("c2", "index at zero vs direct degree (finite catalog)", c2_index_vs_degree),
    ("c3", "normalizer T residual and determinant", c3_t_residual),
    ("c4", "discrete spectrum and embedding constant", c4_discrete_spectrum),
    ("c5", "resonant solvability (odd sublinear part)", c5_resonant_solvability),
    ("c6", "coercive solvability", c6_coercive_solvability),
    ("c7", "parity criterion with shooting and Newton", c7_parity),
    ("c8", "double-degenerate problem", c8_double_degenerate),
    ("c9", "Kronecker consistency in 1-D", c9_kronecker),
    ("c10", "report determinism", c10_determinism),
]

TIME_LIMITS = {"c1": 10.0}


def run_criterion(cid: str, corrupt: bool = False) -> CriterionResult:
    for id_, title, fn in CRITERIA:
        if id_ == cid:
            break
    else:
        raise KeyError(cid)
    ck = Checker(corrupt)
    t0 = time.perf_counter()
    try:
        fn(ck)
    except Exception as exc:  # a crash is a failure of the criterion, reported by name
        ck.failures.append(f"{type(exc).__name__}: {exc}")
    dt = time.perf_counter() - t0
    if cid in TIME_LIMITS and dt > TIME_LIMITS[cid]:
        ck.failures.append(f"runtime {dt:.2f}s exceeds {TIME_LIMITS[cid]:g}s")
    return CriterionResult(id_, title, not ck.failures, ck.details, ck.failures, dt)


def run_all(corrupt=()) -> list:
    return [run_criterion(cid, cid in corrupt) for cid, _, _ in CRITERIA]
