"""Built-in problems used by the self-test and the acceptance suite.

Each entry is a plain dict in the config "problem" format so that it can be
written to a JSON file and fed to ``analyze`` unchanged.
"""

from __future__ import annotations

import copy

from .fem1d import ProblemSpec

PROBLEMS = {
    # resonant at infinity, odd sublinear part, small forcing
    "landesman-lazer": {
        "g": "-pi^2*t + sign(t)*abs(t)^0.5 + 0.1*sin(2*pi*x)",
        "gprimeInf": "-pi^2",
        "gk": {"expr": "sign(t)*abs(t)^0.5", "order": 0.5, "parity": "odd"},
        "resonant_at_infinity": True,
    },
    # same with an even part: reduced map has degree 0
    "landesman-lazer-even": {
        "g": "-pi^2*t + abs(t)^0.5 + 0.1*sin(2*pi*x)",
        "gprimeInf": "-pi^2",
        "gk": {"expr": "abs(t)^0.5", "order": 0.5, "parity": "even"},
        "resonant_at_infinity": True,
    },
    # forced, strongly monotone flux, one-sided bound on g
    "coercive": {
        "f": "s + sin(2*pi*x)",
        "fprimeInf": "1",
        "g": "t^3 - 3*t",
        "delta": 3,
    },
    "coercive-violated": {"g": "-15*t", "gprime0": "-15", "gprimeInf": "-15", "delta": 9},
    "coercive-delta-too-large": {"g": "t^3 - 3*t", "delta": 12},
    # linearizations at 0 and infinity differ in the count of negative eigenvalues
    "parity": {
        "g": "-5*t - 10*t^3/(1+t^2)",
        "gprime0": "-5",
        "gprimeInf": "-15",
    },
    "parity-2": {
        "g": "-15*t - 30*t^3/(1+t^2)",
        "gprime0": "-15",
        "gprimeInf": "-45",
    },
    "parity-equal": {"g": "-5*t", "gprime0": "-5", "gprimeInf": "-5"},
    # nondegenerate at 0, resonant at infinity with even part
    "resonant-infinity-even": {
        "g": "-pi^2*t + 5*t/(1+t^2) + t^2/(1+abs(t)^1.5)",
        "gprimeInf": "-pi^2",
        "gk": {"expr": "abs(t)^0.5", "order": 0.5, "parity": "even"},
        "resonant_at_infinity": True,
    },
    # resonant at both ends: odd cubic part at 0, even square-root part at infinity
    "double-degenerate": {
        "g": "-pi^2*t + t^3/(1+t^4) + t^4/(1+abs(t)^3.5)",
        "gprime0": "-pi^2",
        "gprimeInf": "-pi^2",
        "gl": {"expr": "t^3", "order": 3, "parity": "odd"},
        "gk": {"expr": "abs(t)^0.5", "order": 0.5, "parity": "even"},
        "resonant_at_zero": True,
        "resonant_at_infinity": True,
    },
    # parities the other way round: even quadratic part at 0, odd square root at infinity
    "double-degenerate-swapped": {
        "g": "-pi^2*t + t^2/(1+t^4) + sign(t)*abs(t)^2.5/(1+t^2)",
        "gprime0": "-pi^2",
        "gprimeInf": "-pi^2",
        "gl": {"expr": "t^2", "order": 2, "parity": "even"},
        "gk": {"expr": "sign(t)*abs(t)^0.5", "order": 0.5, "parity": "odd"},
        "resonant_at_zero": True,
        "resonant_at_infinity": True,
    },
    # coercive at infinity, degenerate at zero through a tuned drift coefficient
    "coercive-degenerate": {
        "q": "a*cos(2*pi*x)*t/(1+t^2)",
        "qprime0": "a*cos(2*pi*x)",
        "g": "-3*t + t^2/(1+t^2)",
        "gprime0": "-3",
        "gl": {"expr": "t^2", "order": 2, "parity": "even"},
        "parameters": {"a": 0.0},
        "tune": {"parameter": "a", "range": [0.0, 40.0]},
        "resonant_at_zero": True,
        "delta": 4,
    },
    "linear": {"g": "-5*t", "gprime0": "-5", "gprimeInf": "-5"},
}


def problem(name: str) -> dict:
    return copy.deepcopy(PROBLEMS[name])


def spec(name: str, n_elements: int = 100) -> ProblemSpec:
    return ProblemSpec.from_dict(problem(name), n_elements)
