"""Command line interface: analyze, spectrum, degree-demo, selftest.

Exit codes: 0 when the run completed, 2 when a requested procedure refused
(every procedure, under ``"auto"``), 1 on any error.
"""

from __future__ import annotations

import argparse
import copy
import json
import math
import sys
import time
from dataclasses import dataclass, field
from typing import Optional

import jsonschema
import numpy as np
import scipy.linalg as sla

from . import __version__, acceptance, catalog, oracle, verdicts
from .degree import DegreeError, degree_1d, degree_2d_winding, degree_nd_regular
from .exprlang import ExprError, ExprSyntaxError, parse
from .fem1d import (
    Discretization, FEMError, MisdeclaredResonanceError, ProblemSpec, embedding_constant,
    resonance_align, spec_pencil,
)
from .numerics import DEFAULT_KERNEL_TOL
from .reduction import ReductionError, analyze_pencil

_EXPR = {"type": "string", "minLength": 1}
_PART = {
    "type": "object",
    "properties": {
        "expr": _EXPR,
        "order": {"type": "number", "minimum": 0},
        "parity": {"enum": ["odd", "even", "none"]},
    },
    "required": ["expr", "order"],
    "additionalProperties": False,
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "problem": {
            "type": "object",
            "properties": {
                **{k: _EXPR for k in ("p", "f", "q", "g", "fprime0", "qprime0", "gprime0",
                                      "fprimeInf", "qprimeInf", "gprimeInf")},
                **{k: _PART for k in ("fk", "qk", "gk", "ql", "gl")},
                "resonant_at_zero": {"type": "boolean"},
                "resonant_at_infinity": {"type": "boolean"},
                "resonance_mode_zero": {"type": "integer", "minimum": 1},
                "resonance_mode_infinity": {"type": "integer", "minimum": 1},
                "delta": {"type": "number"},
                "parameters": {
                    "type": "object",
                    "propertyNames": {"pattern": "^[A-Za-z_][A-Za-z0-9_]*$"},
                    "additionalProperties": {"type": "number"},
                },
                "tune": {
                    "type": "object",
                    "properties": {
                        "parameter": {"type": "string"},
                        "range": {"type": "array", "items": {"type": "number"},
                                  "minItems": 2, "maxItems": 2},
                    },
                    "required": ["parameter", "range"],
                    "additionalProperties": False,
                },
            },
            "required": ["g"],
            "additionalProperties": False,
        },
        "mesh": {
            "type": "object",
            "properties": {"n_elements": {"type": "integer", "minimum": 8, "maximum": 513}},
            "additionalProperties": False,
        },
        "analysis": {
            "type": "object",
            "properties": {
                "theorems": {
                    "oneOf": [
                        {"const": "auto"},
                        {"type": "array", "items": {"enum": list(verdicts.THEOREMS)},
                         "minItems": 1, "uniqueItems": True},
                    ]
                },
                "tolerance": {"type": "number", "exclusiveMinimum": 0, "maximum": 1e-2},
                "verify_with_oracle": {"type": "boolean"},
                "oracle": {
                    "type": "object",
                    "properties": {
                        "method": {"enum": ["shooting", "newton", "both"]},
                        "s_range": {"type": "array", "items": {"type": "number"},
                                    "minItems": 2, "maxItems": 2},
                        "starts": {"type": "integer", "minimum": 0},
                        "seed": {"type": "integer"},
                    },
                    "additionalProperties": False,
                },
            },
            "additionalProperties": False,
        },
    },
    "required": ["problem"],
    "additionalProperties": False,
}

DEFAULT_ANALYSIS = {
    "theorems": "auto", "tolerance": DEFAULT_KERNEL_TOL, "verify_with_oracle": False,
    "oracle": {"method": "newton", "s_range": [-20.0, 20.0], "starts": 8, "seed": 0},
}

_X_FIELDS = ("p", "fprime0", "qprime0", "gprime0", "fprimeInf", "qprimeInf", "gprimeInf")


class ConfigError(ValueError):
    def __init__(self, pointer: str, message: str):
        super().__init__(f"{pointer or '/'}: {message}")
        self.pointer = pointer


def _pointer(path) -> str:
    return "".join("/" + str(p).replace("~", "~0").replace("/", "~1") for p in path)


def validate_config(config: dict) -> dict:
    """Schema check, expression parsing and principal-part validation.

    Returns the config with defaults filled in.
    """
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(config), key=lambda e: (list(e.absolute_path), e.message))
    if errors:
        err = jsonschema.exceptions.best_match(errors)
        raise ConfigError(_pointer(err.absolute_path), err.message)
    cfg = copy.deepcopy(config)
    cfg.setdefault("mesh", {}).setdefault("n_elements", 100)
    analysis = cfg.setdefault("analysis", {})
    for k, v in DEFAULT_ANALYSIS.items():
        if k == "oracle":
            o = analysis.setdefault("oracle", {})
            for k2, v2 in v.items():
                o.setdefault(k2, v2)
        else:
            analysis.setdefault(k, v)

    prob = cfg["problem"]
    names = set(prob.get("parameters", {}))
    variables = {"f": "xs", "q": "xt", "g": "xt", **{k: "x" for k in _X_FIELDS}}
    for key, vars_ in variables.items():
        if key in prob:
            try:
                parse(prob[key], set(vars_) | names)
            except ExprSyntaxError as exc:
                raise ConfigError(f"/problem/{key}", str(exc))
    part_var = {"fk": "s", "qk": "t", "gk": "t", "ql": "t", "gl": "t"}
    for key, var in part_var.items():
        if key in prob:
            try:
                parse(prob[key]["expr"], {"x", var} | names)
            except ExprSyntaxError as exc:
                raise ConfigError(f"/problem/{key}/expr", str(exc))
    tune = prob.get("tune")
    if tune and tune["parameter"] not in names:
        raise ConfigError("/problem/tune/parameter",
                          f"{tune['parameter']!r} is not listed in /problem/parameters")

    spec = ProblemSpec.from_dict(prob, cfg["mesh"]["n_elements"])
    for key in part_var:
        part = getattr(spec, key)
        if part is None:
            continue
        try:
            rep = part.check()
        except ExprError as exc:
            raise ConfigError(f"/problem/{key}", f"cannot be sampled: {exc}")
        if not rep.passed:
            raise ConfigError(
                f"/problem/{key}",
                f"declared order {part.decl.order:g} / parity {part.decl.parity} not satisfied "
                f"(homogeneity violation {rep.homogeneity_violation:.3e}, "
                f"parity violation {rep.parity_violation:.3e})")
    return cfg


def load_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}")
    return validate_config(data)


# --- serialization -------------------------------------------------------------------

def _num(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    text = format(x, ".17g")
    return text if any(c in text for c in ".e") else text + ".0"


def dumps(obj, indent: int = 2, level: int = 0) -> str:
    """JSON with doubles written to 17 significant digits."""
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.number)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + dumps(v, indent, level + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, np.ndarray):
        return dumps(obj.tolist(), indent, level)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _num(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps_machine(machine: dict) -> str:
    return dumps(machine)


# --- report -------------------------------------------------------------------------

@dataclass
class Report:
    machine: dict
    timings: dict = field(default_factory=dict)
    summary: list = field(default_factory=list)
    exit_code: int = 0

    def to_text(self) -> str:
        doc = {"summary": self.summary, "machine": self.machine, "timings": self.timings}
        return dumps(doc) + "\n"


def _mass_spectrum(pencil, count: int = 10) -> dict:
    if pencil.symmetric:
        mu = sla.eigh(pencil.A, pencil.mass, eigvals_only=True).astype(complex)
    else:
        mu = sla.eigvals(pencil.A, pencil.mass)
    scale = max(np.abs(mu).max(), 1e-300)
    real = np.sort(mu[np.abs(mu.imag) <= 1e-8 * scale].real)
    cplx = mu[(np.abs(mu.imag) > 1e-8 * scale) & (mu.imag > 0)]
    cplx = cplx[np.lexsort((cplx.imag, cplx.real))]
    return {"real": real[:count].tolist(),
            "complex_pairs": [[z.real, z.imag] for z in cplx[:count]]}


def spectral_table(spec: ProblemSpec, disc: Discretization, tol: float) -> dict:
    out = {}
    for side in ("zero", "infinity"):
        entry: dict = {}
        try:
            pencil = spec_pencil(disc, spec, side)
        except FEMError as exc:
            out[side] = {"available": False, "reason": str(exc)}
            continue
        entry["available"] = True
        entry["mass_eigenvalues"] = _mass_spectrum(pencil)
        resonant = spec.resonant_at_zero if side == "zero" else spec.resonant_at_infinity
        if resonant:
            mode = spec.resonance_mode_zero if side == "zero" else spec.resonance_mode_infinity
            try:
                al = resonance_align(pencil, mode, tol=tol)
                pencil = al.pencil
                entry["alignment"] = {"shift": al.shift, "relative_distance": al.relative_distance,
                                      "mode": al.mode, "kernel_dim": al.kernel_dim}
            except MisdeclaredResonanceError as exc:
                entry["alignment"] = {"error": str(exc)}
        try:
            entry["structure"] = analyze_pencil(pencil, tol).summary()
        except ReductionError as exc:
            entry["structure"] = {"error": str(exc)}
        out[side] = entry
    return out


def _spec_for(cfg: dict) -> ProblemSpec:
    return ProblemSpec.from_dict(cfg["problem"], cfg["mesh"]["n_elements"])


def _oracle_section(spec: ProblemSpec, disc: Discretization, ocfg: dict, timings: dict) -> dict:
    out = {}
    method = ocfg["method"]
    sets = {}
    if method in ("shooting", "both"):
        t0 = time.perf_counter()
        try:
            sets["shooting"] = oracle.find_solutions_shooting(spec, tuple(ocfg["s_range"]),
                                                              n_elements=disc.N)
            out["shooting"] = sets["shooting"].summary()
        except oracle.NotClassicalError as exc:
            out["shooting"] = {"skipped": str(exc)}
        timings["oracle_shooting"] = time.perf_counter() - t0
    if method in ("newton", "both"):
        t0 = time.perf_counter()
        sets["newton"] = oracle.find_solutions_newton(spec, disc, starts=ocfg["starts"],
                                                      seed=ocfg["seed"])
        out["newton"] = sets["newton"].summary()
        timings["oracle_newton"] = time.perf_counter() - t0
    if len(sets) == 2:
        out["shooting_newton_distance"] = oracle.set_distance(sets["shooting"], sets["newton"])
    out["found_solution"] = any(s.solutions for s in sets.values())
    out["found_nontrivial"] = any(s.nontrivial() for s in sets.values())
    return out


def analyze_config(cfg: dict, theorems=None) -> Report:
    cfg = validate_config(cfg)
    timings = {}
    t_all = time.perf_counter()
    spec = _spec_for(cfg)
    disc = Discretization(spec.n_elements)
    tol = float(cfg["analysis"]["tolerance"])
    requested = theorems or cfg["analysis"]["theorems"]

    t0 = time.perf_counter()
    # resonance tuning changes the problem; tables and oracle use the tuned one
    tuned = verdicts.tuned_spec(spec, disc) if spec.tune else spec
    table = spectral_table(tuned, disc, tol)
    timings["spectral_table"] = time.perf_counter() - t0

    results = []
    ids = verdicts.THEOREMS if requested == "auto" else requested
    for th in ids:
        t0 = time.perf_counter()
        results.append(verdicts.run(th, spec, disc, tol))
        timings[f"verdict_{th}"] = time.perf_counter() - t0

    machine = {
        "tool": {"name": "degindex", "version": __version__},
        "config": cfg,
        "tuned_parameters": {k: tuned.parameters[k] for k in sorted(tuned.parameters)
                             if spec.tune and k == spec.tune["parameter"]},
        "discretization": {"n_elements": disc.N, "unknowns": disc.n,
                           "K_emb": embedding_constant(disc), "pencils": table},
        "verdicts": [v.as_dict() for v in results],
    }
    if cfg["analysis"]["verify_with_oracle"]:
        machine["oracle"] = _oracle_section(tuned, disc, cfg["analysis"]["oracle"], timings)
        for v, vd in zip(results, machine["verdicts"]):
            if v.conclusion == verdicts.SOLVABLE:
                vd["oracle_confirms"] = machine["oracle"]["found_solution"]
            elif v.conclusion == verdicts.NONTRIVIAL:
                vd["oracle_confirms"] = machine["oracle"]["found_nontrivial"]
    timings["total"] = time.perf_counter() - t_all

    refused = [v for v in results if v.refused]
    if requested == "auto":
        code = 2 if len(refused) == len(results) else 0
    else:
        code = 2 if refused else 0
    return Report(machine, timings, summarize(machine), code)


def summarize(machine: dict) -> list:
    """Human-readable lines; every number printed here is read from ``machine``."""
    lines = [f"mesh N = {machine['discretization']['n_elements']}, "
             f"K_emb = {machine['discretization']['K_emb']:.6g}"]
    for side, entry in machine["discretization"]["pencils"].items():
        st = entry.get("structure") if entry.get("available") else None
        if st and "nu" in st:
            lines.append(f"linearization at {side}: nu = {st['nu']}, n0 = {st['n0']}, l = {st['l']}")
    for vd in machine["verdicts"]:
        idx = ", ".join(f"ind({s}) = {r['value']}" for s, r in vd["indices"].items())
        text = f"{vd['theorem']}: {vd['status']}, {vd['conclusion']}"
        if vd["refusal"]:
            text += f" ({vd['refusal']})"
        if idx:
            text += f"; {idx}"
        if "oracle_confirms" in vd:
            text += f"; oracle confirms: {vd['oracle_confirms']}"
        lines.append(text)
    return lines


# --- built-in degree demos ------------------------------------------------------------

DEMO_MAPS = {
    "identity": (2, lambda u: u),
    "neg-identity": (2, lambda u: -u),
    "identity-1d": (1, lambda u: u),
    "neg-identity-1d": (1, lambda u: -u),
    "identity-3d": (3, lambda u: u),
    "neg-identity-3d": (3, lambda u: -u),
    "complex-square": (2, lambda u: np.array([u[0] ** 2 - u[1] ** 2, 2 * u[0] * u[1]])),
    "complex-cube": (2, lambda u: np.array([u[0] ** 3 - 3 * u[0] * u[1] ** 2,
                                            3 * u[0] ** 2 * u[1] - u[1] ** 3])),
    "complex-conjugate": (2, lambda u: np.array([u[0], -u[1]])),
    "cubic-1d": (1, lambda u: u - u ** 3),
}


def degree_demo(name: str, radius: float = 1.0) -> int:
    dim, F = DEMO_MAPS[name]
    if dim == 1:
        return degree_1d(F, radius)
    if dim == 2:
        return degree_2d_winding(F, radius)
    return degree_nd_regular(F, radius, dim=dim).value


# --- entry point ------------------------------------------------------------------------

def _write(text: str, out: Optional[str]):
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="degindex", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"degindex {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="run verdict procedures on a problem config")
    a.add_argument("config")
    a.add_argument("--out", help="write the report here instead of stdout")

    s = sub.add_parser("spectrum", help="spectral tables of both linearizations")
    s.add_argument("config")
    s.add_argument("--out")

    d = sub.add_parser("degree-demo", help="degree of a built-in map")
    d.add_argument("name", choices=sorted(DEMO_MAPS))
    d.add_argument("--radius", type=float, default=1.0)

    t = sub.add_parser("selftest", help="run the acceptance catalog")
    t.add_argument("--list", action="store_true", help="print criterion and problem ids")
    t.add_argument("--only", action="append", default=[], metavar="ID")
    t.add_argument("--corrupt-tolerance", action="append", default=[], metavar="ID",
                   help=argparse.SUPPRESS)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "analyze":
            report = analyze_config(load_config(args.config))
            _write(report.to_text(), args.out)
            for line in report.summary:
                print(line, file=sys.stderr)
            return report.exit_code
        if args.command == "spectrum":
            cfg = load_config(args.config)
            spec = _spec_for(cfg)
            disc = Discretization(spec.n_elements)
            if spec.tune:
                spec = verdicts.tuned_spec(spec, disc)
            machine = {"tool": {"name": "degindex", "version": __version__}, "config": cfg,
                       "discretization": {"n_elements": disc.N, "K_emb": embedding_constant(disc),
                                          "pencils": spectral_table(spec, disc, cfg["analysis"]["tolerance"])}}
            _write(Report(machine).to_text(), args.out)
            return 0
        if args.command == "degree-demo":
            print(degree_demo(args.name, args.radius))
            return 0
        if args.command == "selftest":
            if args.list:
                for cid, title, _ in acceptance.CRITERIA:
                    print(f"{cid}\t{title}")
                for name in catalog.PROBLEMS:
                    print(f"problem:{name}")
                return 0
            ids = args.only or [cid for cid, _, _ in acceptance.CRITERIA]
            failed = 0
            for cid in ids:
                res = acceptance.run_criterion(cid, cid in args.corrupt_tolerance)
                print(res.line(), flush=True)
                failed += not res.passed
            print(f"{len(ids) - failed}/{len(ids)} criteria passed")
            return 1 if failed else 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (ExprError, FEMError, ReductionError, DegreeError, OSError, KeyError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 1


if __name__ == "__main__":
    sys.exit(main())
