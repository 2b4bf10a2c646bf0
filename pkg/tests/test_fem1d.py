import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from degindex.fem1d import (
    Discretization, EllipticityError, MisdeclaredResonanceError, ProblemSpec, assemble_linear_pencil,
    assemble_residual, dirichlet_zero_check, embedding_constant, linearization_defect,
    monotonicity_probe, pencil_eigenvalues, remainder_ratios, resonance_align, spec_pencil,
)
from degindex.reduction import analyze_pencil


def spec(**kw):
    return ProblemSpec.from_dict(kw)


def test_linear_residual_is_stiffness_action(disc100):
    u = np.sin(np.pi * disc100.nodes[1:-1])
    r = assemble_residual(disc100, spec(g="0"), u)
    np.testing.assert_allclose(r, disc100.stiffness @ u, atol=1e-13)


def test_zero_preserved(disc100):
    r = assemble_residual(disc100, spec(g="t^3 - 3*t", q="x*t/(1+t^2)"), np.zeros(disc100.n))
    assert np.all(r == 0)


def test_matrices_symmetric_positive(disc100):
    K, M = disc100.stiffness, disc100.mass
    np.testing.assert_allclose(K, K.T)
    np.testing.assert_allclose(M, M.T)
    assert np.linalg.eigvalsh(K).min() > 0 and np.linalg.eigvalsh(M).min() > 0
    # interior hat functions integrate to h
    np.testing.assert_allclose(M.sum(axis=1)[1:-1], disc100.h, rtol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.floats(-20, 20), st.floats(-3, 3), st.integers(0, 2 ** 31))
def test_residual_of_linear_problem_is_pencil_action(c, b, seed):
    disc = Discretization(24)
    sp = spec(g=f"{c!r}*t", q=f"{b!r}*t")
    u = np.random.default_rng(seed).standard_normal(disc.n)
    A = spec_pencil(disc, sp, "zero").A
    np.testing.assert_allclose(assemble_residual(disc, sp, u), A @ u, atol=1e-9 * (1 + np.abs(A @ u).max()))


def test_identity_pencil(disc100):
    p = assemble_linear_pencil(disc100, 1.0)
    np.testing.assert_allclose(p.A, disc100.stiffness)
    st_ = analyze_pencil(p)
    np.testing.assert_allclose(st_.eigenvalues.real, 1.0, atol=1e-10)


def test_resonant_pencil_smallest_eigenvalue(disc200):
    p = assemble_linear_pencil(disc200, 1.0, 0.0, -math.pi ** 2)
    mu = np.linalg.eigvals(np.linalg.solve(p.mass, p.A)).real
    assert abs(mu).min() < 1e-3


def test_drift_makes_pencil_nonsymmetric(disc100):
    p = assemble_linear_pencil(disc100, 1.0, lambda x: np.cos(2 * np.pi * x), 0.0)
    assert not p.symmetric
    assert not analyze_pencil(p).symmetric


def test_ellipticity_enforced(disc100):
    with pytest.raises(EllipticityError):
        assemble_linear_pencil(disc100, lambda x: x - 0.5)


def test_alignment_first_mode(disc200):
    p = assemble_linear_pencil(disc200, 1.0, 0.0, -math.pi ** 2)
    al = resonance_align(p)
    assert al.kernel_dim == 1 and al.mode == 1
    st_ = analyze_pencil(al.pencil)
    phi = st_.kernel_basis[:, 0]
    # the aligned kernel vector is annihilated
    assert np.linalg.norm(al.pencil.A @ phi) <= 1e-10 * disc200.stiffness_norm * np.linalg.norm(phi)
    # compare with sin(pi x) in L2 after normalising both
    x = disc200.nodes[1:-1]
    ref = np.sin(np.pi * x)
    M = disc200.mass
    a = phi / math.sqrt(phi @ M @ phi)
    b = ref / math.sqrt(ref @ M @ ref)
    a *= np.sign(a @ M @ b)
    assert math.sqrt((a - b) @ M @ (a - b)) < 1e-2


def test_alignment_second_mode(disc200):
    p = assemble_linear_pencil(disc200, 1.0, 0.0, -4 * math.pi ** 2)
    al = resonance_align(p, which=2)
    phi = analyze_pencil(al.pencil).kernel_basis[:, 0]
    x = disc200.nodes[1:-1]
    corr = abs(phi @ np.sin(2 * np.pi * x)) / (np.linalg.norm(phi) * np.linalg.norm(np.sin(2 * np.pi * x)))
    assert corr > 1 - 1e-6


def test_alignment_idempotent(disc100):
    p = assemble_linear_pencil(disc100, 1.0, 0.0, -math.pi ** 2)
    once = resonance_align(p)
    twice = resonance_align(once.pencil)
    scale = np.linalg.norm(p.A, 2) / np.linalg.norm(p.mass, 2)
    assert abs(twice.shift) < 1e-12 * scale


def test_misdeclared_resonance(disc100):
    sp = spec(g="-5*t", gprimeInf="-5", resonant_at_infinity=True)
    with pytest.raises(MisdeclaredResonanceError, match="9[0-9]\\.[0-9]% away"):
        resonance_align(spec_pencil(disc100, sp, "infinity"))


def test_embedding_constant():
    errs = {N: abs(embedding_constant(Discretization(N)) - 1 / math.pi) * math.pi for N in (10, 20, 200)}
    assert errs[200] < 1e-3
    assert errs[10] < 1e-2
    assert errs[20] < errs[10]


def test_eigenvalue_convergence(disc200):
    lam = pencil_eigenvalues(disc200, 5)
    k = np.arange(1, 6)
    assert np.all(np.abs(lam / (k * np.pi) ** 2 - 1) < 1e-3)


def test_monotonicity_probe():
    assert monotonicity_probe(spec(g="0", f="s")) == pytest.approx(1.0)
    m = monotonicity_probe(spec(g="0", f="2*s + atan(s)"))
    assert 2.0 <= m <= 3.0
    assert monotonicity_probe(spec(g="0", f="s^3")) < 1e-6
    with pytest.raises(ValueError):
        monotonicity_probe(spec(g="0"), sample_count=10)


def test_dirichlet_zero_check():
    assert dirichlet_zero_check(spec(g="t^3 - 3*t"))
    assert not dirichlet_zero_check(spec(g="t^3 - 3*t + x"))
    assert dirichlet_zero_check(spec(g="0", q="x*t/(1+t^2)"))
    assert not dirichlet_zero_check(spec(g="0", f="s + sin(2*pi*x)"))


def test_linearization_defect(disc100):
    good = spec(g="-5*t - 10*t^3/(1+t^2)", gprime0="-5")
    bad = spec(g="-5*t - 10*t^3/(1+t^2)", gprime0="-4")
    assert linearization_defect(disc100, good) < 1e-8
    assert linearization_defect(disc100, bad) == pytest.approx(1.0, rel=1e-3)


def test_zero_side_linearization_defaults_to_finite_differences():
    sp = spec(g="-5*t + t^3", q="2*x*t")
    a, b, c = sp.linear_coefficients("zero", np.array([0.25, 0.5]))
    np.testing.assert_allclose(b, [0.5, 1.0], rtol=1e-8)
    np.testing.assert_allclose(c, -5.0, rtol=1e-8)


def test_remainder_ratios():
    sp = spec(g="-pi^2*t + sign(t)*abs(t)^0.5 + 0.1*sin(2*pi*x)", gprimeInf="-pi^2",
              gk={"expr": "sign(t)*abs(t)^0.5", "order": 0.5, "parity": "odd"})
    r = remainder_ratios(sp, "g")
    assert r[0] > r[1] > r[2]
    wrong = spec(g="-pi^2*t + t", gprimeInf="-pi^2")
    r = remainder_ratios(wrong, "g", order=0.5)
    assert not r[0] > r[2]


def test_parameters_and_tuning_helpers():
    sp = spec(g="a*t", parameters={"a": 2.0})
    assert sp.gval(0.3, 1.5) == pytest.approx(3.0)
    assert sp.with_parameter("a", -1.0).gval(0.3, 1.5) == pytest.approx(-1.5)
