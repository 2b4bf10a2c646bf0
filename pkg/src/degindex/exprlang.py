"""Scalar expression language for coefficient functions.

Expressions are parsed once into an immutable tree and evaluated either on
Python floats or elementwise on numpy arrays (used at quadrature points).

Grammar::

    expr   := term (("+" | "-") term)*
    term   := factor (("*" | "/") factor)*
    factor := "-" factor | power
    power  := atom ("^" factor)?
    atom   := number | name | name "(" expr ("," expr)? ")" | "(" expr ")"
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Mapping, Union

import numpy as np

Number = Union[float, np.ndarray]

CONSTANTS = {"pi": math.pi, "e": math.e}
FUNCTIONS = {
    "sin": 1, "cos": 1, "tan": 1, "atan": 1, "exp": 1, "log": 1, "sqrt": 1,
    "abs": 1, "sign": 1, "tanh": 1, "min": 2, "max": 2,
}


class ExprError(ValueError):
    pass


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, position: int, text: str = ""):
        self.position = position
        self.text = text
        super().__init__(f"{message} at position {position}")


class UnknownIdentifierError(ExprSyntaxError):
    pass


class ArityError(ExprSyntaxError):
    pass


class DomainError(ExprError):
    """Evaluation hit a point outside an operation's domain."""

    def __init__(self, message: str, node: "Node", value=None):
        self.node = node
        self.value = value
        super().__init__(f"{message} in '{to_text(node)}'")


# --- tree -----------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple


Node = Union[Num, Const, Var, Neg, BinOp, Call]


def to_text(node: Node) -> str:
    """Fully parenthesized rendering; parses back to the same tree."""
    if isinstance(node, Num):
        return repr(float(node.value))
    if isinstance(node, (Const, Var)):
        return node.name
    if isinstance(node, Neg):
        return f"(-{to_text(node.operand)})"
    if isinstance(node, BinOp):
        return f"({to_text(node.left)} {node.op} {to_text(node.right)})"
    if isinstance(node, Call):
        return f"{node.func}({', '.join(to_text(a) for a in node.args)})"
    raise TypeError(node)


# --- parser ---------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^(),]))"
)


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            start = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ExprSyntaxError(f"unexpected character {text[start]!r}", start, text)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, variables: frozenset):
        self.text = text
        self.variables = variables
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, val, pos = self.peek()
        if val != value or kind != "op":
            found = "end of input" if kind == "end" else repr(val)
            raise ExprSyntaxError(f"expected {value!r}, found {found}", pos, self.text)
        self.advance()

    def parse(self) -> Node:
        node = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected token {val!r}", pos, self.text)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.advance()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.advance()[1]
            node = BinOp(op, node, self.factor())
        return node

    def factor(self) -> Node:
        if self.peek()[0] == "op" and self.peek()[1] == "-":
            self.advance()
            return Neg(self.factor())
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.advance()
            return BinOp("^", base, self.factor())
        return base

    def atom(self) -> Node:
        kind, val, pos = self.advance()
        if kind == "num":
            return Num(float(val))
        if kind == "name":
            if self.peek()[0] == "op" and self.peek()[1] == "(":
                if val not in FUNCTIONS:
                    raise UnknownIdentifierError(f"unknown function {val!r}", pos, self.text)
                self.advance()
                args = [self.expr()]
                while self.peek()[0] == "op" and self.peek()[1] == ",":
                    self.advance()
                    args.append(self.expr())
                self.expect(")")
                if len(args) != FUNCTIONS[val]:
                    raise ArityError(
                        f"{val} takes {FUNCTIONS[val]} argument(s), got {len(args)}",
                        pos, self.text)
                return Call(val, tuple(args))
            if val in self.variables:
                return Var(val)
            if val in CONSTANTS:
                return Const(val)
            if val in FUNCTIONS:
                raise ArityError(f"function {val!r} used without arguments", pos, self.text)
            raise UnknownIdentifierError(f"unknown identifier {val!r}", pos, self.text)
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(val)
        raise ExprSyntaxError(f"unexpected {found}", pos, self.text)


@dataclass(frozen=True)
class Expression:
    root: Node
    variables: frozenset
    source: str = ""

    def __call__(self, **bindings) -> Number:
        return evaluate(self, bindings)

    def __str__(self) -> str:
        return to_text(self.root)

    def free_variables(self) -> set:
        found = set()
        stack = [self.root]
        while stack:
            n = stack.pop()
            if isinstance(n, Var):
                found.add(n.name)
            elif isinstance(n, Neg):
                stack.append(n.operand)
            elif isinstance(n, BinOp):
                stack.extend((n.left, n.right))
            elif isinstance(n, Call):
                stack.extend(n.args)
        return found


def parse(text: str, variables) -> Expression:
    if not isinstance(text, str) or not text.strip():
        raise ExprSyntaxError("empty expression", 0, str(text))
    variables = frozenset(variables)
    clash = variables & (set(CONSTANTS) | set(FUNCTIONS))
    if clash:
        raise ExprError(f"variable names shadow builtins: {sorted(clash)}")
    return Expression(_Parser(text, variables).parse(), variables, text)


# --- evaluation -----------------------------------------------------------

def _is_array(v) -> bool:
    return isinstance(v, np.ndarray)


def _any(cond) -> bool:
    return bool(np.any(cond))


def _first_bad(values, cond):
    if _is_array(values):
        return float(np.asarray(values)[np.asarray(cond)].flat[0])
    return float(values)


def _sign(v):
    if _is_array(v):
        return np.sign(v)
    return float((v > 0) - (v < 0))


def _pow(base, expo, node):
    if type(base) is float and type(expo) is float:
        if base < 0 and expo != math.floor(expo):
            raise DomainError("negative base with non-integer exponent", node, base)
        if base == 0 and expo < 0:
            raise DomainError("division by zero (0 to a negative power)", node)
        try:
            return base ** expo
        except OverflowError:
            return math.inf if base > 0 or expo % 2 == 0 else -math.inf
    if type(expo) is float and expo >= 0 and expo == math.floor(expo):
        return np.power(base, expo)
    integral = np.equal(np.floor(expo), expo)
    bad = np.logical_and(np.less(base, 0), np.logical_not(integral))
    if _any(bad):
        raise DomainError("negative base with non-integer exponent", node,
                          _first_bad(base, bad) if _is_array(base) else base)
    zero_div = np.logical_and(np.equal(base, 0), np.less(expo, 0))
    if _any(zero_div):
        raise DomainError("division by zero (0 to a negative power)", node)
    if _is_array(base) or _is_array(expo):
        with np.errstate(over="ignore"):
            return np.power(np.asarray(base, dtype=float), np.asarray(expo, dtype=float))
    try:
        return float(base) ** float(expo)
    except OverflowError:
        return math.inf if base > 0 or float(expo) % 2 == 0 else -math.inf


_NP_UNARY = {
    "sin": np.sin, "cos": np.cos, "tan": np.tan, "atan": np.arctan, "exp": np.exp,
    "log": np.log, "sqrt": np.sqrt, "abs": np.abs, "tanh": np.tanh,
}
_MATH_UNARY = {
    "sin": math.sin, "cos": math.cos, "tan": math.tan, "atan": math.atan, "exp": math.exp,
    "log": math.log, "sqrt": math.sqrt, "abs": abs, "tanh": math.tanh,
}


def _eval(node: Node, env: Mapping[str, Number]) -> Number:
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return env[node.name]
    if isinstance(node, Const):
        return CONSTANTS[node.name]
    if isinstance(node, Neg):
        return -_eval(node.operand, env)
    if isinstance(node, BinOp):
        a = _eval(node.left, env)
        b = _eval(node.right, env)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "/":
            if _any(np.equal(b, 0)):
                raise DomainError("division by zero", node)
            return a / b
        return _pow(a, b, node)
    if isinstance(node, Call):
        args = [_eval(a, env) for a in node.args]
        name = node.func
        if name == "min":
            return np.minimum(*args) if any(map(_is_array, args)) else min(args)
        if name == "max":
            return np.maximum(*args) if any(map(_is_array, args)) else max(args)
        (v,) = args
        if name == "sign":
            return _sign(v)
        if name == "sqrt" and _any(np.less(v, 0)):
            raise DomainError("square root of a negative number", node, _first_bad(v, np.less(v, 0)))
        if name == "log" and _any(np.less_equal(v, 0)):
            raise DomainError("logarithm of a non-positive number", node,
                              _first_bad(v, np.less_equal(v, 0)))
        if _is_array(v):
            with np.errstate(over="ignore"):
                return _NP_UNARY[name](v)
        try:
            return float(_MATH_UNARY[name](v))
        except OverflowError:
            return math.inf
        except ValueError:
            # math rejects e.g. sin(inf); numpy yields nan, keep the two paths equal
            return math.nan
    raise TypeError(node)


def interpret(expr: Expression, bindings: Mapping[str, Number]) -> Number:
    """Reference tree-walking evaluator (slow; used to cross-check ``evaluate``)."""
    env = _prepare(expr, bindings)
    return _finish(_eval(expr.root, env), env)


def _prepare(expr, bindings):
    missing = expr.free_variables() - set(bindings)
    if missing:
        raise ExprError(f"unbound variables: {sorted(missing)}")
    env = {}
    for k, v in bindings.items():
        if isinstance(v, (np.ndarray, list, tuple)):
            env[k] = np.asarray(v, dtype=float)
        else:
            env[k] = float(v)
    return env


# --- compilation ------------------------------------------------------------
#
# Expressions compile to a single Python lambda over their variables; the
# checked operations go through helpers carrying the offending node.

def _c_div(a, b, node):
    if type(b) is float:
        if b == 0.0:
            raise DomainError("division by zero", node)
        return a / b
    if _any(np.equal(b, 0)):
        raise DomainError("division by zero", node)
    return a / b


def _c_unary(name, v, node):
    if type(v) is float:
        if name == "sign":
            return float((v > 0) - (v < 0))
        if (name == "sqrt" and v < 0) or (name == "log" and v <= 0):
            raise DomainError(f"{name} of a number outside its domain", node, v)
        try:
            return float(_MATH_UNARY[name](v))
        except OverflowError:
            return math.inf
        except ValueError:
            # math rejects e.g. sin(inf); numpy yields nan, keep the two paths equal
            return math.nan
    if name == "sign":
        return _sign(v)
    if name == "sqrt" and _any(np.less(v, 0)):
        raise DomainError("square root of a negative number", node, _first_bad(v, np.less(v, 0)))
    if name == "log" and _any(np.less_equal(v, 0)):
        raise DomainError("logarithm of a non-positive number", node, _first_bad(v, np.less_equal(v, 0)))
    if _is_array(v):
        with np.errstate(over="ignore"):
            return _NP_UNARY[name](v)
    try:
        return float(_MATH_UNARY[name](v))
    except OverflowError:
        return math.inf


def _c_min(a, b):
    return np.minimum(a, b) if _is_array(a) or _is_array(b) else min(a, b)


def _c_max(a, b):
    return np.maximum(a, b) if _is_array(a) or _is_array(b) else max(a, b)


def _source(node: Node, nodes: list) -> str:
    if isinstance(node, Num):
        return repr(float(node.value))
    if isinstance(node, Const):
        return repr(CONSTANTS[node.name])
    if isinstance(node, Var):
        return "v_" + node.name
    if isinstance(node, Neg):
        return f"(-{_source(node.operand, nodes)})"
    nodes.append(node)
    k = len(nodes) - 1
    if isinstance(node, BinOp):
        a = _source(node.left, nodes)
        b = _source(node.right, nodes)
        if node.op in "+-*":
            return f"({a} {node.op} {b})"
        if node.op == "/":
            return f"_div({a}, {b}, _n[{k}])"
        return f"_pow({a}, {b}, _n[{k}])"
    args = [_source(a, nodes) for a in node.args]
    if node.func in ("min", "max"):
        return f"_{node.func}({args[0]}, {args[1]})"
    return f"_unary({node.func!r}, {args[0]}, _n[{k}])"


def compile_function(expr: Expression, names=None):
    """Positional function of ``names`` (default: sorted declared variables)."""
    names = tuple(sorted(expr.variables)) if names is None else tuple(names)
    missing = expr.free_variables() - set(names)
    if missing:
        raise ExprError(f"unbound variables: {sorted(missing)}")
    nodes: list = []
    body = _source(expr.root, nodes)
    params = ", ".join("v_" + n for n in names)
    namespace = {"_div": _c_div, "_pow": _pow, "_unary": _c_unary, "_min": _c_min,
                 "_max": _c_max, "_n": tuple(nodes)}
    return eval(f"lambda {params}: {body}", namespace)  # noqa: S307 - source built from the AST


def _finish(out, env):
    arrays = [v for v in env.values() if _is_array(v)]
    if arrays:
        shape = np.broadcast_shapes(*(a.shape for a in arrays))
        return np.broadcast_to(np.asarray(out, dtype=float), shape).copy()
    return float(out)


def evaluate(expr: Expression, bindings: Mapping[str, Number]) -> Number:
    """Evaluate on floats, or elementwise when any binding is an array."""
    env = _prepare(expr, bindings)
    fn = expr.__dict__.get("_compiled")
    if fn is None:
        fn = compile_function(expr, tuple(sorted(expr.variables)))
        object.__setattr__(expr, "_compiled", fn)
    args = [env.get(n, 0.0) for n in sorted(expr.variables)]
    return _finish(fn(*args), env)




# --- homogeneity ----------------------------------------------------------

PARITIES = ("odd", "even", "none")
HOMOGENEITY_TOL = 1e-8


@dataclass(frozen=True)
class HomogeneityDecl:
    order: float
    parity: str = "none"
    variable: str = "t"

    def __post_init__(self):
        if self.order < 0:
            raise ValueError("homogeneity order must be nonnegative")
        if self.parity not in PARITIES:
            raise ValueError(f"parity must be one of {PARITIES}")


@dataclass(frozen=True)
class HomogeneityReport:
    homogeneity_violation: float
    parity_violation: float

    @property
    def passed(self) -> bool:
        return (self.homogeneity_violation <= HOMOGENEITY_TOL
                and self.parity_violation <= HOMOGENEITY_TOL)


def _rel(a: np.ndarray, b: np.ndarray) -> float:
    scale = np.maximum(np.abs(a), np.abs(b))
    diff = np.abs(a - b)
    with np.errstate(invalid="ignore", divide="ignore"):
        rel = np.where(scale > 0, diff / np.where(scale > 0, scale, 1.0), 0.0)
    if not np.all(np.isfinite(rel)):
        return math.inf
    return float(rel.max(initial=0.0))


def check_homogeneity(expr: Expression, decl: HomogeneityDecl,
                      sample_count: int = 16) -> HomogeneityReport:
    """Sample h(x, c t) against c^r h(x, t) and the declared parity."""
    if sample_count < 16:
        raise ValueError("sample_count must be at least 16")
    xs = np.linspace(0.0, 1.0, sample_count)
    mags = 2.0 ** np.arange(-3, 4)
    ts = np.concatenate([mags, -mags])
    X, T = np.meshgrid(xs, ts, indexing="ij")

    def h(tvals):
        env = {name: X for name in expr.variables if name != decl.variable}
        env[decl.variable] = tvals
        return evaluate(expr, env)

    base = h(T)
    worst = 0.0
    for c in (0.5, 2.0, 10.0):
        worst = max(worst, _rel(h(c * T), c ** decl.order * base))
    if decl.parity == "odd":
        parity = _rel(h(-T), -base)
    elif decl.parity == "even":
        parity = _rel(h(-T), base)
    else:
        parity = 0.0
    return HomogeneityReport(worst, parity)
