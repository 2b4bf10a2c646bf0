import json
import pathlib
import subprocess
import sys

import pytest

from degindex import catalog
from degindex.cli import (
    ConfigError, analyze_config, dumps, dumps_machine, load_config, main, validate_config,
)

CONFIGS = pathlib.Path(__file__).resolve().parents[1] / "configs"


def small(problem, **analysis):
    base = {"theorems": "auto", "verify_with_oracle": False}
    base.update(analysis)
    return {"problem": problem, "mesh": {"n_elements": 40}, "analysis": base}


def write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


@pytest.mark.parametrize("name,expected", [
    ("identity", 1), ("neg-identity", 1), ("complex-square", 2), ("complex-conjugate", -1),
    ("neg-identity-1d", -1), ("neg-identity-3d", -1), ("complex-cube", 3),
])
def test_degree_demo(capsys, name, expected):
    assert main(["degree-demo", name]) == 0
    assert int(capsys.readouterr().out.strip()) == expected


@pytest.mark.parametrize("radius,expected", [("0.5", 1), ("2", -1)])
def test_degree_demo_radius(capsys, radius, expected):
    assert main(["degree-demo", "cubic-1d", "--radius", radius]) == 0
    assert int(capsys.readouterr().out.strip()) == expected


def test_schema_errors_carry_pointer():
    with pytest.raises(ConfigError) as e:
        validate_config({"problem": {"g": "t"}, "mesh": {"n_elements": 4}})
    assert e.value.pointer == "/mesh/n_elements"
    with pytest.raises(ConfigError) as e:
        validate_config({"problem": {"g": "t", "bogus": 1}, "mesh": {"n_elements": 20}})
    assert e.value.pointer.startswith("/problem")
    with pytest.raises(ConfigError) as e:
        validate_config({"problem": {}, "mesh": {"n_elements": 20}})


def test_expression_error_pointer():
    with pytest.raises(ConfigError) as e:
        validate_config({"problem": {"g": "t + * 2"}, "mesh": {"n_elements": 20}})
    assert e.value.pointer == "/problem/g"
    assert "position 4" in str(e.value)


def test_bad_parity_declaration():
    cfg = {"problem": {"g": "-pi^2*t + abs(t)^0.5", "gprimeInf": "-pi^2",
                       "gk": {"expr": "abs(t)^0.5", "order": 0.5, "parity": "odd"},
                       "resonant_at_infinity": True},
           "mesh": {"n_elements": 20}}
    with pytest.raises(ConfigError) as e:
        validate_config(cfg)
    assert e.value.pointer.startswith("/problem/gk")


def test_defaults_filled():
    cfg = validate_config({"problem": {"g": "t"}, "mesh": {"n_elements": 20}})
    assert cfg["analysis"]["theorems"] == "auto"
    assert cfg["analysis"]["oracle"]["seed"] == 0


def test_exit_codes(tmp_path, capsys):
    ok = write(tmp_path, small(catalog.problem("parity")), "ok.json")
    assert main(["analyze", ok, "--out", str(tmp_path / "r.json")]) == 0
    refused = small(catalog.problem("parity"), theorems=["solv_resonant"])
    assert main(["analyze", write(tmp_path, refused, "refused.json")]) == 2
    bad = small({"g": "t"})
    bad["mesh"]["n_elements"] = 4
    assert main(["analyze", write(tmp_path, bad, "bad.json")]) == 1
    assert "/mesh/n_elements" in capsys.readouterr().err
    assert main(["analyze", str(tmp_path / "missing.json")]) == 1


def test_report_determinism():
    cfg = small(catalog.problem("parity"), verify_with_oracle=True,
                oracle={"method": "newton", "starts": 2, "seed": 5})
    a = analyze_config(cfg)
    b = analyze_config(cfg)
    assert dumps_machine(a.machine) == dumps_machine(b.machine)
    v = {d["theorem"]: d for d in a.machine["verdicts"]}
    assert v["nontrivial_parity"]["conclusion"] == "nontrivial_solution_exists"
    assert v["nontrivial_parity"]["oracle_confirms"] is True


def test_float_formatting_roundtrips():
    x = 0.1 + 0.2
    text = dumps({"x": x, "n": 3, "inf": float("inf"), "l": [1.0, -2.5]})
    back = json.loads(text)
    assert back["x"] == x and back["n"] == 3 and back["inf"] == "inf"
    assert back["l"] == [1.0, -2.5]


def test_spectrum_drift_and_alignment(tmp_path, capsys):
    # a drift makes the pencil non-symmetric, but in 1-D it is similar to a
    # weighted symmetric problem, so the spectrum stays real
    cfg = {"problem": {"g": "0", "q": "60*cos(2*pi*x)*t", "gprime0": "0", "qprime0": "60*cos(2*pi*x)"},
           "mesh": {"n_elements": 60}}
    assert main(["spectrum", write(tmp_path, cfg)]) == 0
    out = json.loads(capsys.readouterr().out)
    zero = out["machine"]["discretization"]["pencils"]["zero"]
    assert zero["structure"]["symmetric"] is False
    assert zero["mass_eigenvalues"]["complex_pairs"] == []
    assert len(zero["mass_eigenvalues"]["real"]) == 10

    cfg = {"problem": {"g": "-pi^2*t + sign(t)*abs(t)^0.5", "gprimeInf": "-pi^2",
                       "gk": {"expr": "sign(t)*abs(t)^0.5", "order": 0.5, "parity": "odd"},
                       "resonant_at_infinity": True},
           "mesh": {"n_elements": 60}}
    assert main(["spectrum", write(tmp_path, cfg, "r.json")]) == 0
    inf = json.loads(capsys.readouterr().out)["machine"]["discretization"]["pencils"]["infinity"]
    assert inf["alignment"]["kernel_dim"] == 1
    assert inf["structure"]["n0"] == 1


def test_selftest_list(capsys):
    assert main(["selftest", "--list"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert [l.split("\t")[0] for l in out[:10]] == [f"c{i}" for i in range(1, 11)]


def test_corrupted_tolerance_reports_named_failure(capsys):
    assert main(["selftest", "--only", "c9", "--corrupt-tolerance", "c9"]) == 1
    out = capsys.readouterr().out
    assert "[FAIL] c9" in out and "0/1 criteria passed" in out


def test_shipped_configs_validate():
    paths = sorted(CONFIGS.glob("*.json"))
    assert paths
    for p in paths:
        load_config(str(p))


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "degindex", "degree-demo", "complex-cube"],
                       capture_output=True, text=True, check=True)
    assert r.stdout.strip() == "3"
