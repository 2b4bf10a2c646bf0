"""Solvability and nontrivial-solvability decisions for the Dirichlet problem.

Each procedure checks its hypotheses on the discretized problem, computes the
indices it needs (at zero and/or infinity) and concludes only when every
hypothesis passed:

* ``solv_resonant``: resonant at infinity with odd sublinear principal parts;
  solvable when ind(inf) != 0.
* ``solv_coercive``: strongly monotone flux, one-sided bound
  g(x,t) t >= -delta t^2 with delta < m / K^2 and q asymptotically zero;
  then ind(inf) = 1.
* ``nontrivial_resonant_inf``: nondegenerate at zero, resonant at infinity
  with even principal parts; nontrivial when ind(0) != ind(inf).
* ``nontrivial_double_degenerate``: resonant at both ends with opposite
  parities; nontrivial when ind(0) != ind(inf).
* ``nontrivial_coercive_degenerate_zero``: coercive at infinity (index 1),
  resonant at zero with even principal parts; nontrivial when ind(0) != 1.
* ``nontrivial_parity``: both linearizations nondegenerate; nontrivial when
  the negative-eigenvalue counts have different parities.

A kernel that only appears after discretization error is removed is handled
by shifting the pencil onto the nearest discrete eigenvalue (see
``fem1d.resonance_align``). The degenerate case is reduced to a map on the
kernel whose degree enters the index; the requirement that no kernel element
solves the principal-part problem is checked as "the reduced map does not
vanish on the kernel sphere".
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg as sla

from .degree import SphereZeroError, sphere_samples
from .numerics import DEFAULT_KERNEL_TOL
from .fem1d import (
    ASYMPTOTIC_AMPLITUDES, Discretization, FEMError, MisdeclaredResonanceError, ProblemSpec, dirichlet_zero_check,
    embedding_constant, linearization_defect, monotonicity_probe, principal_assembler,
    ratios_decreasing, remainder_ratios, resonance_align, spec_pencil,
)
from .reduction import (
    IndexResult, ReductionError, SpectralStructure, analyze_pencil, build_reduced_map,
    index_at_infinity, index_at_zero,
)

SOLVABLE = "solvable"
NONTRIVIAL = "nontrivial_solution_exists"
INCONCLUSIVE = "inconclusive"

THEOREMS = (
    "nontrivial_parity",
    "solv_coercive",
    "solv_resonant",
    "nontrivial_resonant_inf",
    "nontrivial_double_degenerate",
    "nontrivial_coercive_degenerate_zero",
)

LINEARIZATION_TOL = 1e-6
SIGN_GRID = 2.0 ** np.arange(-10, 11)

ZERO_AMPLITUDES = (1e-2, 1e-3, 1e-4)


class Refusal(Exception):
    """A failed guard; the procedure stops and the verdict is marked refused."""

    def __init__(self, name: str, reason: Optional[str] = None, **evidence):
        super().__init__(reason or name)
        self.name = name
        self.reason = reason
        self.evidence = evidence


@dataclass
class Hypothesis:
    name: str
    passed: bool
    evidence: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "evidence": self.evidence}


@dataclass
class Verdict:
    theorem: str
    hypotheses: list = field(default_factory=list)
    indices: dict = field(default_factory=dict)
    conclusion: str = INCONCLUSIVE
    status: str = "evaluated"
    refusal: Optional[str] = None
    notes: list = field(default_factory=list)
    spectra: dict = field(default_factory=dict)
    theta_samples: dict = field(default_factory=dict)
    tuned_parameters: dict = field(default_factory=dict)
    tolerance: float = DEFAULT_KERNEL_TOL

    @property
    def heuristic(self) -> bool:
        return any(r.heuristic for r in self.indices.values())

    @property
    def refused(self) -> bool:
        return self.status == "refused"

    @property
    def all_passed(self) -> bool:
        return all(h.passed for h in self.hypotheses)

    def check(self, name: str, passed, **evidence) -> bool:
        self.hypotheses.append(Hypothesis(name, bool(passed), evidence))
        return bool(passed)

    def refuse(self, name: str, reason: Optional[str] = None, **evidence) -> "Verdict":
        self.check(name, False, **evidence)
        self.status = "refused"
        self.refusal = reason or name
        self.conclusion = INCONCLUSIVE
        return self

    def conclude(self, success: bool, outcome: str) -> "Verdict":
        self.conclusion = outcome if (success and self.all_passed) else INCONCLUSIVE
        return self

    def as_dict(self) -> dict:
        return {
            "theorem": self.theorem, "status": self.status, "refusal": self.refusal,
            "conclusion": self.conclusion, "heuristic": self.heuristic,
            "hypotheses": [h.as_dict() for h in self.hypotheses],
            "indices": {k: v.as_dict() for k, v in self.indices.items()},
            "spectra": self.spectra, "theta_samples": self.theta_samples,
            "tuned_parameters": self.tuned_parameters, "notes": self.notes,
        }


def _procedure(theorem: str, uses_principal_parts: bool = True):
    def wrap(body):
        @functools.wraps(body)
        def run(spec: ProblemSpec, disc: Optional[Discretization] = None,
                tol: float = DEFAULT_KERNEL_TOL) -> Verdict:
            disc = disc or Discretization(spec.n_elements)
            v = Verdict(theorem, tolerance=tol)
            try:
                body(v, spec, disc)
            except Refusal as r:
                v.refuse(r.name, r.reason, **r.evidence)
            except FEMError as exc:
                v.refuse("problem data admissible", str(exc))
            if (uses_principal_parts and v.status == "evaluated"
                    and v.conclusion == INCONCLUSIVE):
                v.notes.append("only the leading principal parts are examined; "
                               "higher-order refinements are out of scope")
            return v
        return run
    return wrap


# --- shared checks -------------------------------------------------------------

@dataclass
class SideAnalysis:
    structure: SpectralStructure
    index: Optional[IndexResult]
    shift: float = 0.0


def _require_zero_solution(v: Verdict, spec: ProblemSpec, disc: Discretization):
    if not dirichlet_zero_check(spec, disc):
        raise Refusal("u = 0 solves the problem", "u = 0 is not a solution")
    v.check("u = 0 solves the problem", True)


def _check_parts(v: Verdict, spec: ProblemSpec, side: str, parity, order_ok, order_text: str):
    """Validate the declared principal parts at ``side``; returns (parity, order)."""
    parts = spec.principal_parts(side)
    if not parts:
        raise Refusal(f"principal parts declared at {side}", f"no principal parts at {side}")
    for key, part in sorted(parts.items()):
        rep = part.check()
        v.check(f"{key} part at {side}: homogeneous with declared parity", rep.passed,
                order=part.decl.order, parity=part.decl.parity,
                homogeneity_violation=rep.homogeneity_violation,
                parity_violation=rep.parity_violation)
    orders = sorted({p.decl.order for p in parts.values()})
    order = orders[0]
    v.check(f"principal parts at {side} share one order", len(orders) == 1, orders=orders)
    v.check(f"order at {side} {order_text}", order_ok(order), order=order)
    parities = {p.decl.parity for p in parts.values()}
    found = parities.pop() if len(parities) == 1 else "none"
    if parity is not None:
        v.check(f"principal parts at {side} are {parity}", found == parity, parity=found)
    return found, order


def _infinity_remainders(v: Verdict, spec: ProblemSpec, order: float, keys=("f", "q", "g")):
    for key in keys:
        if key == "f" and spec.f is None:
            continue
        if key == "q" and spec.qk is None and spec.qprimeInf is None and \
                not np.any(spec.qval(np.linspace(0, 1, 9), np.full(9, 1e4))):
            continue
        r = remainder_ratios(spec, key, order=order)
        v.check(f"{key} remainder at infinity is o(|t|^{order:g})", ratios_decreasing(r), ratios=r)


def zero_remainder_ratios(spec: ProblemSpec, key: str, order: float, xs=None) -> list:
    """max_x |h(x,t) - h'(x,0) t - h^l(x,t)| / |t|^order for t in 1e-2, 1e-3, 1e-4."""
    xs = np.linspace(0.0, 1.0, 33) if xs is None else xs
    part = {"q": spec.ql, "g": spec.gl}[key]
    _, b, c = spec.linear_coefficients("zero", xs)
    lin = b if key == "q" else c
    h = spec.qval if key == "q" else spec.gval
    out = []
    for T in ZERO_AMPLITUDES:
        worst = 0.0
        for t in (T, -T):
            tt = np.full_like(xs, t)
            val = h(xs, tt) - lin * tt - spec.part_value(part, xs, tt)
            worst = max(worst, float(np.abs(val).max()) / T ** order)
        out.append(worst)
    return out


def _zero_remainders(v: Verdict, spec: ProblemSpec, order: float):
    for key in ("q", "g"):
        r = zero_remainder_ratios(spec, key, order)
        v.check(f"{key} remainder at zero is o(|t|^{order:g})", ratios_decreasing(r), ratios=r)


def _flux_linear(v: Verdict, spec: ProblemSpec):
    if spec.f is None:
        v.check("flux is linear in the gradient", True, form="p(x)*s")
        return
    xs = np.linspace(0.0, 1.0, 17)
    X, S = np.meshgrid(xs, np.array([-10.0, -1.0, -0.1, 0.1, 1.0, 10.0]))
    slope = spec.flux(X, np.ones_like(S)) - spec.flux(X, np.zeros_like(S))
    dev = float(np.abs(spec.flux(X, S) - slope * S).max() / max(np.abs(slope).max(), 1e-300))
    v.check("flux is linear in the gradient", dev <= 1e-10, deviation=dev)


def _zero_linearization(v: Verdict, spec: ProblemSpec, disc: Discretization):
    defect = linearization_defect(disc, spec)
    v.check("declared linearization at zero matches the residual Jacobian",
            defect <= LINEARIZATION_TOL, relative_defect=defect)


def _record_spectrum(v: Verdict, side: str, structure: SpectralStructure, shift: float):
    entry = structure.summary()
    entry["alignment_shift"] = shift
    v.spectra[side] = entry


def _structure(v: Verdict, spec: ProblemSpec, disc: Discretization, side: str,
               resonant: bool):
    tol = v.tolerance
    pencil = spec_pencil(disc, spec, side)
    shift = 0.0
    if resonant:
        mode = spec.resonance_mode_zero if side == "zero" else spec.resonance_mode_infinity
        try:
            al = resonance_align(pencil, mode, tol=tol)
        except MisdeclaredResonanceError as exc:
            raise Refusal(f"kernel at {side} nonempty", "kernel empty", detail=str(exc))
        pencil, shift = al.pencil, al.shift
        v.check(f"kernel at {side} nonempty", True, dimension=al.kernel_dim,
                alignment_shift=shift, relative_distance=al.relative_distance, mode=al.mode)
    try:
        structure = analyze_pencil(pencil, tol)
    except ReductionError as exc:
        raise Refusal(f"spectral structure at {side} determined", str(exc))
    _record_spectrum(v, side, structure, shift)
    return pencil, structure, shift


def _analyze_side(v: Verdict, spec: ProblemSpec, disc: Discretization, side: str,
                  resonant: bool, parity: str = "none",
                  order: Optional[float] = None) -> SideAnalysis:
    """Index at ``side``: (-1)^nu when nondegenerate, via the reduced map otherwise."""
    pencil, structure, shift = _structure(v, spec, disc, side, resonant)
    fn = index_at_zero if side == "zero" else index_at_infinity
    if structure.l == 0:
        res = fn(structure)
        v.indices[side] = res
        return SideAnalysis(structure, res, shift)
    try:
        theta = build_reduced_map(structure, pencil, principal_assembler(disc, spec, side),
                                  order, parity)
    except (ReductionError, ArithmeticError, ValueError) as exc:
        v.check(f"reduced map at {side} well defined", False, reason=str(exc))
        return SideAnalysis(structure, None, shift)
    pts = sphere_samples(theta.dim, 360)
    vals = np.array([theta(c) for c in pts])
    norms = np.linalg.norm(vals, axis=1)
    k = int(np.argmin(norms))
    v.theta_samples[side] = {"points": pts.tolist(), "values": vals.tolist(),
                             "min_norm": float(norms[k])}
    scale = float(norms.max())
    if not v.check(f"reduced map at {side} nonvanishing on the kernel sphere",
                   norms[k] > max(1e-10, 1e-8 * scale),
                   min_norm=float(norms[k]), at=pts[k].tolist()):
        return SideAnalysis(structure, None, shift)
    try:
        res = fn(structure, theta)
    except (SphereZeroError, ValueError) as exc:
        v.check(f"index at {side} computed", False, reason=str(exc))
        return SideAnalysis(structure, None, shift)
    v.indices[side] = res
    return SideAnalysis(structure, res, shift)


# --- procedures ------------------------------------------------------------------

@_procedure("solv_resonant")
def solv_resonant(v: Verdict, spec: ProblemSpec, disc: Discretization):
    if not spec.resonant_at_infinity:
        raise Refusal("kernel at infinity nonempty", "kernel empty",
                      detail="resonant_at_infinity not declared")
    parity, order = _check_parts(v, spec, "infinity", "odd", lambda k: 0 <= k < 1, "in [0, 1)")
    _infinity_remainders(v, spec, order)
    inf = _analyze_side(v, spec, disc, "infinity", True, parity, order)
    v.conclude(inf.index is not None and inf.index.value != 0, SOLVABLE)


def coercivity_hypotheses(v: Verdict, spec: ProblemSpec, disc: Discretization) -> bool:
    if spec.delta is None:
        raise Refusal("delta supplied", "delta missing")
    delta = spec.delta
    m_hat = monotonicity_probe(spec, 1000)
    k_emb = embedding_constant(disc)
    bound = m_hat / k_emb ** 2 if m_hat > 0 else 0.0
    ok = v.check("flux strongly monotone", m_hat > 0, m=m_hat)
    ok &= v.check("0 < delta < m / K^2", 0 < delta < bound, delta=delta, m=m_hat, K=k_emb,
                  bound=bound)
    x = disc.xq.ravel()
    ts = np.concatenate([-SIGN_GRID[::-1], SIGN_GRID])
    X, T = np.meshgrid(x, ts, indexing="ij")
    lhs = spec.gval(X, T) * T
    rhs = -delta * T ** 2
    viol = lhs < rhs - 1e-12 * np.abs(rhs)
    if np.any(viol):
        i, j = np.argwhere(viol)[0]
        ok &= v.check("g(x,t) t >= -delta t^2 on the sample grid", False,
                      witness={"x": float(X[i, j]), "t": float(T[i, j]),
                               "g_times_t": float(lhs[i, j]), "bound": float(rhs[i, j])})
    else:
        v.check("g(x,t) t >= -delta t^2 on the sample grid", True, points=int(lhs.size))
    xs = np.linspace(0.0, 1.0, 33)
    ratios = [max(float(np.abs(spec.qval(xs, np.full_like(xs, s * t))).max()) / t for s in (1, -1))
              for t in ASYMPTOTIC_AMPLITUDES]
    q_ok = all(r == 0 for r in ratios) or (ratios_decreasing(ratios) and ratios[-1] < 0.1 * ratios[0])
    ok &= v.check("q asymptotically zero", q_ok, ratios=ratios)
    return bool(ok)


@_procedure("solv_coercive", uses_principal_parts=False)
def solv_coercive(v: Verdict, spec: ProblemSpec, disc: Discretization):
    if coercivity_hypotheses(v, spec, disc):
        v.indices["infinity"] = IndexResult(1, "infinity", 0, 0, 0, 1)
        v.notes.append("index at infinity is 1 by the a priori estimate")
    v.conclude(True, SOLVABLE)


@_procedure("nontrivial_resonant_inf")
def nontrivial_resonant_inf(v: Verdict, spec: ProblemSpec, disc: Discretization):
    _require_zero_solution(v, spec, disc)
    if not spec.resonant_at_infinity:
        raise Refusal("kernel at infinity nonempty", "kernel empty",
                      detail="resonant_at_infinity not declared")
    if spec.resonant_at_zero:
        raise Refusal("linearization at zero nondegenerate", "resonance declared at zero",
                      hint="use nontrivial_double_degenerate")
    _zero_linearization(v, spec, disc)
    zero = _analyze_side(v, spec, disc, "zero", False)
    if zero.structure.l:
        raise Refusal("linearization at zero nondegenerate", "degenerate at zero",
                      kernel_dimension=zero.structure.l,
                      hint="use nontrivial_double_degenerate")
    v.check("linearization at zero nondegenerate", True, nu=zero.structure.nu)
    parity, order = _check_parts(v, spec, "infinity", "even", lambda k: 0 <= k < 1, "in [0, 1)")
    _infinity_remainders(v, spec, order)
    inf = _analyze_side(v, spec, disc, "infinity", True, parity, order)
    v.conclude(inf.index is not None and zero.index.value != inf.index.value, NONTRIVIAL)


@_procedure("nontrivial_double_degenerate")
def nontrivial_double_degenerate(v: Verdict, spec: ProblemSpec, disc: Discretization):
    _require_zero_solution(v, spec, disc)
    if not (spec.resonant_at_zero and spec.resonant_at_infinity):
        raise Refusal("resonance declared at zero and at infinity", "resonance flags missing",
                      zero=spec.resonant_at_zero, infinity=spec.resonant_at_infinity)
    v.check("resonance declared at zero and at infinity", True)
    _flux_linear(v, spec)
    _zero_linearization(v, spec, disc)
    p_inf, k = _check_parts(v, spec, "infinity", None, lambda k: 0 < k < 1, "in (0, 1)")
    p_zero, lam = _check_parts(v, spec, "zero", None, lambda lam: lam > 1, "> 1")
    v.check("parities pair as (odd at infinity, even at zero) or the reverse",
            (p_inf, p_zero) in (("odd", "even"), ("even", "odd")), infinity=p_inf, zero=p_zero)
    _infinity_remainders(v, spec, k, ("q", "g"))
    _zero_remainders(v, spec, lam)
    inf = _analyze_side(v, spec, disc, "infinity", True, p_inf, k)
    zero = _analyze_side(v, spec, disc, "zero", True, p_zero, lam)
    missing = [s for s, a in (("infinity", inf), ("zero", zero)) if a.index is None]
    if missing:
        v.notes.append("index undefined at " + ", ".join(missing))
    v.conclude(not missing and zero.index.value != inf.index.value, NONTRIVIAL)


def smallest_real_eigenvalue(spec: ProblemSpec, disc: Discretization) -> float:
    pencil = spec_pencil(disc, spec, "zero")
    mu = sla.eigvals(pencil.A, pencil.mass)
    real = mu[np.abs(mu.imag) <= 1e-8 * np.abs(mu).max()].real
    return float(real.min())


def tune_resonance(spec: ProblemSpec, disc: Discretization, parameter: str, lo: float, hi: float,
                   iterations: int = 200):
    """Bisect ``parameter`` on [lo, hi] until the smallest real eigenvalue of
    the zero-side pencil changes sign. Returns (tuned spec, value)."""
    f_lo = smallest_real_eigenvalue(spec.with_parameter(parameter, lo), disc)
    f_hi = smallest_real_eigenvalue(spec.with_parameter(parameter, hi), disc)
    if not f_lo * f_hi <= 0:
        raise MisdeclaredResonanceError(
            f"smallest eigenvalue keeps its sign on [{lo:g}, {hi:g}] ({f_lo:.4g}, {f_hi:.4g})")
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi) or f_lo == 0 or f_hi == 0:
            break
        f_mid = smallest_real_eigenvalue(spec.with_parameter(parameter, mid), disc)
        if (f_mid < 0) == (f_lo < 0):
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
    best = lo if abs(f_lo) <= abs(f_hi) else hi
    return spec.with_parameter(parameter, best), best


@_procedure("nontrivial_coercive_degenerate_zero")
def nontrivial_coercive_degenerate_zero(v: Verdict, spec: ProblemSpec, disc: Discretization):
    if not spec.resonant_at_zero:
        raise Refusal("resonance at zero declared", "resonant_at_zero not set")
    _require_zero_solution(v, spec, disc)
    if spec.tune:
        name = spec.tune["parameter"]
        lo, hi = (float(b) for b in spec.tune["range"])
        try:
            spec, value = tune_resonance(spec, disc, name, lo, hi)
        except MisdeclaredResonanceError as exc:
            v.check("resonance tuning found a kernel", False, reason=str(exc))
            v.conclude(False, NONTRIVIAL)
            return
        v.tuned_parameters[name] = value
        v.check("resonance tuning found a kernel", True, parameter=name, value=value)
    coercivity_hypotheses(v, spec, disc)
    v.indices["infinity"] = IndexResult(1, "infinity", 0, 0, 0, 1)
    _flux_linear(v, spec)
    _zero_linearization(v, spec, disc)
    parity, lam = _check_parts(v, spec, "zero", "even", lambda lam: lam > 1, "> 1")
    _zero_remainders(v, spec, lam)
    zero = _analyze_side(v, spec, disc, "zero", True, parity, lam)
    v.conclude(zero.index is not None and zero.index.value != 1, NONTRIVIAL)


@_procedure("nontrivial_parity", uses_principal_parts=False)
def nontrivial_parity(v: Verdict, spec: ProblemSpec, disc: Discretization):
    _require_zero_solution(v, spec, disc)
    if spec.resonant_at_zero or spec.resonant_at_infinity:
        raise Refusal("both linearizations nondegenerate", "resonance declared",
                      zero=spec.resonant_at_zero, infinity=spec.resonant_at_infinity,
                      hint="use the degenerate procedures")
    _, s0, _ = _structure(v, spec, disc, "zero", False)
    _, sinf, _ = _structure(v, spec, disc, "infinity", False)
    if s0.l or sinf.l:
        raise Refusal("both linearizations nondegenerate", "degenerate linearization",
                      kernel_zero=s0.l, kernel_infinity=sinf.l,
                      hint="use the degenerate procedures")
    v.check("both linearizations nondegenerate", True)
    v.indices["zero"] = index_at_zero(s0)
    v.indices["infinity"] = index_at_infinity(sinf)
    _zero_linearization(v, spec, disc)
    _infinity_remainders(v, spec, 1.0)
    v.check("negative-eigenvalue counts", True, nu_zero=s0.nu, nu_infinity=sinf.nu)
    v.conclude((s0.nu - sinf.nu) % 2 == 1, NONTRIVIAL)


PROCEDURES = {
    "nontrivial_parity": nontrivial_parity,
    "solv_coercive": solv_coercive,
    "solv_resonant": solv_resonant,
    "nontrivial_resonant_inf": nontrivial_resonant_inf,
    "nontrivial_double_degenerate": nontrivial_double_degenerate,
    "nontrivial_coercive_degenerate_zero": nontrivial_coercive_degenerate_zero,
}


def run(theorem: str, spec: ProblemSpec, disc: Optional[Discretization] = None,
        tol: float = DEFAULT_KERNEL_TOL) -> Verdict:
    if theorem not in PROCEDURES:
        raise KeyError(f"unknown theorem id {theorem!r}")
    return PROCEDURES[theorem](spec, disc, tol)


def run_auto(spec: ProblemSpec, disc: Optional[Discretization] = None,
             tol: float = DEFAULT_KERNEL_TOL) -> list:
    """Every procedure in the fixed order; refused ones are kept in the list."""
    disc = disc or Discretization(spec.n_elements)
    return [PROCEDURES[t](spec, disc, tol) for t in THEOREMS]


def tuned_spec(spec: ProblemSpec, disc: Discretization) -> ProblemSpec:
    """Apply the declared resonance tuning, if any."""
    if not spec.tune:
        return spec
    lo, hi = (float(b) for b in spec.tune["range"])
    return tune_resonance(spec, disc, spec.tune["parameter"], lo, hi)[0]
