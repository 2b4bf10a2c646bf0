import numpy as np
import pytest

from degindex import catalog, verdicts
from degindex.fem1d import Discretization, ProblemSpec
from degindex.verdicts import INCONCLUSIVE, NONTRIVIAL, SOLVABLE

EXPECTED = [
    ("landesman-lazer", "solv_resonant", SOLVABLE, {"infinity": (1, -1)}),
    ("landesman-lazer-even", "solv_resonant", INCONCLUSIVE, {"infinity": (0,)}),
    ("coercive", "solv_coercive", SOLVABLE, {"infinity": (1,)}),
    ("coercive-violated", "solv_coercive", INCONCLUSIVE, {}),
    ("coercive-delta-too-large", "solv_coercive", INCONCLUSIVE, {}),
    ("parity", "nontrivial_parity", NONTRIVIAL, {"zero": (1,), "infinity": (-1,)}),
    ("parity-2", "nontrivial_parity", NONTRIVIAL, {"zero": (-1,), "infinity": (1,)}),
    ("parity-equal", "nontrivial_parity", INCONCLUSIVE, {"zero": (1,), "infinity": (1,)}),
    ("resonant-infinity-even", "nontrivial_resonant_inf", NONTRIVIAL, {"zero": (1, -1), "infinity": (0,)}),
    ("double-degenerate", "nontrivial_double_degenerate", NONTRIVIAL, {"zero": (1, -1), "infinity": (0,)}),
    ("double-degenerate-swapped", "nontrivial_double_degenerate", NONTRIVIAL,
     {"zero": (0,), "infinity": (1, -1)}),
    ("coercive-degenerate", "nontrivial_coercive_degenerate_zero", NONTRIVIAL,
     {"zero": (0,), "infinity": (1,)}),
]


@pytest.fixture(scope="module")
def disc():
    return Discretization(100)


def _run(name, theorem, disc):
    sp = verdicts.tuned_spec(catalog.spec(name), disc)
    return verdicts.run(theorem, sp, disc)


@pytest.mark.parametrize("name,theorem,conclusion,indices", EXPECTED, ids=[e[0] for e in EXPECTED])
def test_catalog_verdicts(disc, name, theorem, conclusion, indices):
    v = _run(name, theorem, disc)
    assert v.conclusion == conclusion
    for side, allowed in indices.items():
        assert v.indices[side].value in allowed
    if conclusion != INCONCLUSIVE:
        assert v.status == "evaluated" and v.all_passed
        assert not v.heuristic


def test_conclusive_implies_all_hypotheses_passed(disc):
    for name in catalog.PROBLEMS:
        for v in verdicts.run_auto(verdicts.tuned_spec(catalog.spec(name), disc), disc):
            if v.conclusion != INCONCLUSIVE:
                assert all(h.passed for h in v.hypotheses), (name, v.theorem)
            if v.refused:
                assert v.refusal and v.conclusion == INCONCLUSIVE


@pytest.mark.parametrize("name,theorem", [
    ("landesman-lazer", "solv_resonant"),
    ("parity", "nontrivial_parity"),
    ("double-degenerate", "nontrivial_double_degenerate"),
])
def test_mesh_stability(name, theorem):
    a = _run(name, theorem, Discretization(100))
    b = _run(name, theorem, Discretization(200))
    assert a.conclusion == b.conclusion
    assert {k: r.value for k, r in a.indices.items()} == {k: r.value for k, r in b.indices.items()}


def test_coercive_violation_has_witness(disc):
    v = _run("coercive-violated", "solv_coercive", disc)
    failed = [h for h in v.hypotheses if not h.passed]
    assert failed and "witness" in failed[0].evidence
    w = failed[0].evidence["witness"]
    assert w["g_times_t"] < w["bound"]


def test_delta_bound_reported(disc):
    v = _run("coercive-delta-too-large", "solv_coercive", disc)
    h = next(h for h in v.hypotheses if h.name == "0 < delta < m / K^2")
    assert not h.passed
    assert h.evidence["bound"] == pytest.approx(np.pi ** 2, rel=1e-3)


def test_refusals(disc):
    v = verdicts.run("solv_resonant", catalog.spec("parity"), disc)
    assert v.refused and v.refusal == "kernel empty"
    v = verdicts.run("solv_coercive", catalog.spec("parity"), disc)
    assert v.refused and v.refusal == "delta missing"
    v = verdicts.run("nontrivial_parity", catalog.spec("landesman-lazer"), disc)
    assert v.refused and v.refusal == "u = 0 is not a solution"
    v = verdicts.run("nontrivial_parity", catalog.spec("double-degenerate"), disc)
    assert v.refused


def test_misdeclared_resonance_refuses(disc):
    sp = ProblemSpec.from_dict({"g": "-5*t + sign(t)*abs(t)^0.5", "gprimeInf": "-5",
                                "gk": {"expr": "sign(t)*abs(t)^0.5", "order": 0.5, "parity": "odd"},
                                "resonant_at_infinity": True})
    v = verdicts.run("solv_resonant", sp, disc)
    assert v.refused and v.refusal == "kernel empty"


def test_vanishing_reduced_map_is_inconclusive(disc):
    # zero principal part: the reduced map vanishes on the whole sphere
    sp = ProblemSpec.from_dict({"g": "-pi^2*t", "gprimeInf": "-pi^2",
                                "gk": {"expr": "0*t", "order": 0.5, "parity": "odd"},
                                "resonant_at_infinity": True})
    v = verdicts.run("solv_resonant", sp, disc)
    assert v.conclusion == INCONCLUSIVE
    assert any("vanish" in h.name and not h.passed for h in v.hypotheses)


def test_wrong_declared_linearization_fails(disc):
    sp = ProblemSpec.from_dict({"g": "-5*t - 10*t^3/(1+t^2)", "gprime0": "-4", "gprimeInf": "-15"})
    v = verdicts.run("nontrivial_parity", sp, disc)
    assert v.conclusion == INCONCLUSIVE
    assert any("linearization" in h.name and not h.passed for h in v.hypotheses)


def test_tuning_brings_eigenvalue_to_zero(disc):
    sp = catalog.spec("coercive-degenerate")
    tuned, a = verdicts.tune_resonance(sp, disc, "a", 0.0, 40.0)
    assert abs(verdicts.smallest_real_eigenvalue(tuned, disc)) < 1e-8
    assert 15 < a < 30


def test_verdict_dict_roundtrip(disc):
    import json
    v = _run("parity", "nontrivial_parity", disc)
    d = json.loads(json.dumps(v.as_dict(), default=float))
    assert d["conclusion"] == NONTRIVIAL
    assert d["indices"]["zero"]["value"] == 1
