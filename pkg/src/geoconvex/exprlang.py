"""A small total expression language for scalar functions, point remaps,
and two-argument gap functions.

Grammar (normative):

    expr   := term (("+"|"-") term)*
    term   := factor (("*"|"/") factor)*
    factor := unary ("^" factor)?
    unary  := "-" unary | atom
    atom   := number | ident | call | "(" expr ")"
    call   := ident "(" expr ("," expr)* ")"

Builtins: exp, log, sin, cos, tanh, artanh, sqrt, abs, min, max and the
ternary if(cond, then, else) whose condition is `expr CMP expr` with CMP
one of < <= > >= == (tolerance-free).  Numbers are decimal literals with
an optional exponent.  There is no looping or recursion, so every
well-formed expression terminates.

Evaluation follows IEEE double semantics except that any non-finite value
(log of a nonpositive number, division by zero, 0^negative, overflow)
raises EvalDomainError instead of propagating silently.  `compile_batch`
produces a vectorized numpy twin used by the samplers; it returns raw
arrays and leaves non-finite rows to the caller's masking, with the scalar
evaluator remaining the authority wherever single values are re-checked.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Union

import numpy as np

from .errors import (
    ArityMismatchError,
    EvalDomainError,
    ExprSyntaxError,
    UnknownIdentifierError,
)

MAX_SOURCE_BYTES = 64 * 1024
MAX_DEPTH = 64

BUILTIN_ARITY = {
    "exp": 1,
    "log": 1,
    "sin": 1,
    "cos": 1,
    "tanh": 1,
    "artanh": 1,
    "sqrt": 1,
    "abs": 1,
    "min": 2,
    "max": 2,
}

COMPARISONS = ("<=", ">=", "==", "<", ">")


# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "Node"


@dataclass(frozen=True)
class Binary:
    op: str
    lhs: "Node"
    rhs: "Node"


@dataclass(frozen=True)
class Call:
    fn: str
    args: tuple["Node", ...]


@dataclass(frozen=True)
class IfExpr:
    cmp: str
    lhs: "Node"
    rhs: "Node"
    then: "Node"
    orelse: "Node"


Node = Union[Const, Var, Unary, Binary, Call, IfExpr]


def node_depth(node: Node) -> int:
    if isinstance(node, (Const, Var)):
        return 1
    if isinstance(node, Unary):
        return 1 + node_depth(node.operand)
    if isinstance(node, Binary):
        return 1 + max(node_depth(node.lhs), node_depth(node.rhs))
    if isinstance(node, Call):
        return 1 + max(node_depth(a) for a in node.args)
    return 1 + max(
        node_depth(node.lhs),
        node_depth(node.rhs),
        node_depth(node.then),
        node_depth(node.orelse),
    )


@dataclass(frozen=True)
class Expr:
    root: Node
    variables: tuple[str, ...]

    def __post_init__(self):
        if node_depth(self.root) > MAX_DEPTH:
            raise ValueError(f"expression tree deeper than {MAX_DEPTH}")

    @cached_property
    def _batch_fn(self) -> Callable:
        return compile_batch(self.root)


# ---------------------------------------------------------------------------
# Tokenizer

_NUMBER_RE = re.compile(r"(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?")
_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")


@dataclass(frozen=True)
class _Token:
    kind: str  # NUM IDENT OP CMP LPAREN RPAREN COMMA EOF
    text: str
    pos: int


def _tokenize(src: str) -> list[_Token]:
    tokens = []
    i, n = 0, len(src)
    while i < n:
        c = src[i]
        if c in " \t\r\n":
            i += 1
            continue
        two = src[i : i + 2]
        if two in ("<=", ">=", "=="):
            tokens.append(_Token("CMP", two, i))
            i += 2
            continue
        if c in "<>":
            tokens.append(_Token("CMP", c, i))
            i += 1
            continue
        if c in "+-*/^":
            tokens.append(_Token("OP", c, i))
            i += 1
            continue
        if c == "(":
            tokens.append(_Token("LPAREN", c, i))
            i += 1
            continue
        if c == ")":
            tokens.append(_Token("RPAREN", c, i))
            i += 1
            continue
        if c == ",":
            tokens.append(_Token("COMMA", c, i))
            i += 1
            continue
        m = _NUMBER_RE.match(src, i)
        if m:
            tokens.append(_Token("NUM", m.group(), i))
            i = m.end()
            continue
        m = _IDENT_RE.match(src, i)
        if m:
            tokens.append(_Token("IDENT", m.group(), i))
            i = m.end()
            continue
        raise ExprSyntaxError(f"unexpected character {c!r}", i)
    tokens.append(_Token("EOF", "", n))
    return tokens


# ---------------------------------------------------------------------------
# Parser

class _Parser:
    def __init__(self, tokens: list[_Token], variables: tuple[str, ...]):
        self.tokens = tokens
        self.pos = 0
        self.variables = variables

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, expected):
        tok = self.peek()
        raise ExprSyntaxError(
            f"expected one of {sorted(expected)}, found {tok.text or 'end of input'}",
            tok.pos,
            expected,
        )

    def expect(self, kind: str, text: str | None = None) -> _Token:
        tok = self.peek()
        if tok.kind != kind or (text is not None and tok.text != text):
            self.fail({text or kind})
        return self.advance()

    def parse_expr(self) -> Node:
        node = self.parse_term()
        while self.peek().kind == "OP" and self.peek().text in "+-":
            op = self.advance().text
            node = Binary(op, node, self.parse_term())
        return node

    def parse_term(self) -> Node:
        node = self.parse_factor()
        while self.peek().kind == "OP" and self.peek().text in "*/":
            op = self.advance().text
            node = Binary(op, node, self.parse_factor())
        return node

    def parse_factor(self) -> Node:
        node = self.parse_unary()
        if self.peek().kind == "OP" and self.peek().text == "^":
            self.advance()
            node = Binary("^", node, self.parse_factor())
        return node

    def parse_unary(self) -> Node:
        if self.peek().kind == "OP" and self.peek().text == "-":
            self.advance()
            return Unary("-", self.parse_unary())
        return self.parse_atom()

    def parse_atom(self) -> Node:
        tok = self.peek()
        if tok.kind == "NUM":
            self.advance()
            value = float(tok.text)
            if not math.isfinite(value):
                raise ExprSyntaxError(f"constant {tok.text} overflows", tok.pos)
            return Const(value)
        if tok.kind == "LPAREN":
            self.advance()
            node = self.parse_expr()
            self.expect("RPAREN")
            return node
        if tok.kind == "IDENT":
            self.advance()
            name = tok.text
            if self.peek().kind == "LPAREN":
                return self.parse_call(name, tok.pos)
            if name in BUILTIN_ARITY or name == "if":
                self.fail({"("})
            if name not in self.variables:
                raise UnknownIdentifierError(
                    f"unknown variable {name!r} at offset {tok.pos}; "
                    f"declared: {', '.join(self.variables)}"
                )
            return Var(name)
        self.fail({"number", "identifier", "(", "-"})

    def parse_call(self, name: str, pos: int) -> Node:
        self.expect("LPAREN")
        if name == "if":
            cond_lhs = self.parse_expr()
            cmp_tok = self.peek()
            if cmp_tok.kind != "CMP":
                self.fail(set(COMPARISONS))
            self.advance()
            cond_rhs = self.parse_expr()
            self.expect("COMMA")
            then = self.parse_expr()
            self.expect("COMMA")
            orelse = self.parse_expr()
            self.expect("RPAREN")
            return IfExpr(cmp_tok.text, cond_lhs, cond_rhs, then, orelse)
        if name not in BUILTIN_ARITY:
            raise UnknownIdentifierError(f"unknown function {name!r} at offset {pos}")
        args = [self.parse_expr()]
        while self.peek().kind == "COMMA":
            self.advance()
            args.append(self.parse_expr())
        self.expect("RPAREN")
        if len(args) != BUILTIN_ARITY[name]:
            raise ArityMismatchError(
                f"{name} takes {BUILTIN_ARITY[name]} argument(s), got {len(args)}"
            )
        return Call(name, tuple(args))


def parse(src: str, variables) -> Expr:
    """Parse source text into an Expr over the declared variables."""
    if not src or not src.strip():
        raise ExprSyntaxError("empty expression", 0)
    if len(src.encode()) > MAX_SOURCE_BYTES:
        raise ExprSyntaxError(f"source longer than {MAX_SOURCE_BYTES} bytes", 0)
    variables = tuple(variables)
    parser = _Parser(_tokenize(src), variables)
    root = parser.parse_expr()
    if parser.peek().kind != "EOF":
        parser.fail({"+", "-", "*", "/", "^", "end of input"})
    return Expr(root, variables)


# ---------------------------------------------------------------------------
# Printer

def to_source(node: Node) -> str:
    """Fully parenthesized source; reparsing yields a structurally equal tree."""
    if isinstance(node, Const):
        if node.value < 0.0 or (node.value == 0.0 and math.copysign(1.0, node.value) < 0):
            return f"(-{repr(-node.value)})"
        return repr(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Unary):
        return f"(-{to_source(node.operand)})"
    if isinstance(node, Binary):
        return f"({to_source(node.lhs)} {node.op} {to_source(node.rhs)})"
    if isinstance(node, Call):
        return f"{node.fn}({', '.join(to_source(a) for a in node.args)})"
    return (
        f"if({to_source(node.lhs)} {node.cmp} {to_source(node.rhs)}, "
        f"{to_source(node.then)}, {to_source(node.orelse)})"
    )


def expr_to_source(expr: Expr) -> str:
    return to_source(expr.root)


# ---------------------------------------------------------------------------
# Scalar evaluation

def _compare(op: str, a: float, b: float) -> bool:
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    if op == ">=":
        return a >= b
    return a == b


def _require_finite(value: float, what: str) -> float:
    if not math.isfinite(value):
        raise EvalDomainError(f"non-finite value from {what}")
    return value


def _eval_node(node: Node, env) -> float:
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        try:
            return env[node.name]
        except KeyError:
            raise UnknownIdentifierError(f"unbound variable {node.name!r}") from None
    if isinstance(node, Unary):
        return -_eval_node(node.operand, env)
    if isinstance(node, Binary):
        a = _eval_node(node.lhs, env)
        b = _eval_node(node.rhs, env)
        op = node.op
        if op == "+":
            return _require_finite(a + b, "+")
        if op == "-":
            return _require_finite(a - b, "-")
        if op == "*":
            return _require_finite(a * b, "*")
        if op == "/":
            if b == 0.0:
                raise EvalDomainError("division by zero")
            return _require_finite(a / b, "/")
        # op == "^"
        if a == 0.0 and b < 0.0:
            raise EvalDomainError("zero raised to a negative power")
        try:
            return _require_finite(math.pow(a, b), "^")
        except (ValueError, OverflowError):
            raise EvalDomainError(f"invalid power {a!r} ^ {b!r}") from None
    if isinstance(node, Call):
        args = [_eval_node(a, env) for a in node.args]
        fn = node.fn
        x = args[0]
        if fn == "exp":
            try:
                return _require_finite(math.exp(x), "exp")
            except OverflowError:
                raise EvalDomainError("exp overflow") from None
        if fn == "log":
            if x <= 0.0:
                raise EvalDomainError(f"log of nonpositive value {x!r}")
            return math.log(x)
        if fn == "sin":
            return math.sin(x)
        if fn == "cos":
            return math.cos(x)
        if fn == "tanh":
            return math.tanh(x)
        if fn == "artanh":
            if abs(x) >= 1.0:
                raise EvalDomainError(f"artanh outside (-1, 1): {x!r}")
            return math.atanh(x)
        if fn == "sqrt":
            if x < 0.0:
                raise EvalDomainError(f"sqrt of negative value {x!r}")
            return math.sqrt(x)
        if fn == "abs":
            return abs(x)
        if fn == "min":
            return min(args)
        return max(args)
    # IfExpr: condition operands are strict, only one branch is evaluated
    lhs = _eval_node(node.lhs, env)
    rhs = _eval_node(node.rhs, env)
    branch = node.then if _compare(node.cmp, lhs, rhs) else node.orelse
    return _eval_node(branch, env)


def evaluate(expr: Expr, env) -> float:
    """Evaluate under a full variable binding; deterministic IEEE doubles."""
    return _eval_node(expr.root, env)


# ---------------------------------------------------------------------------
# Vectorized evaluation

_NP_CMP = {
    "<": np.less,
    "<=": np.less_equal,
    ">": np.greater,
    ">=": np.greater_equal,
    "==": np.equal,
}

_NP_UNARY_FN = {
    "exp": np.exp,
    "log": np.log,
    "sin": np.sin,
    "cos": np.cos,
    "tanh": np.tanh,
    "artanh": np.arctanh,
    "sqrt": np.sqrt,
    "abs": np.abs,
}


def compile_batch(node: Node) -> Callable:
    """Compile to a closure mapping {name: array} to an array.

    Non-finite lanes are returned as-is for the caller to mask.  Lanes whose
    if-condition operands are non-finite are poisoned with NaN so a bad
    condition cannot silently select a branch.
    """
    if isinstance(node, Const):
        c = node.value
        return lambda env: c
    if isinstance(node, Var):
        name = node.name
        return lambda env: env[name]
    if isinstance(node, Unary):
        f = compile_batch(node.operand)
        return lambda env: -f(env)
    if isinstance(node, Binary):
        fl = compile_batch(node.lhs)
        fr = compile_batch(node.rhs)
        op = node.op
        if op == "+":
            return lambda env: fl(env) + fr(env)
        if op == "-":
            return lambda env: fl(env) - fr(env)
        if op == "*":
            return lambda env: fl(env) * fr(env)
        if op == "/":
            def _div(env, fl=fl, fr=fr):
                with np.errstate(all="ignore"):
                    b = fr(env)
                    out = fl(env) / b
                return np.where(b == 0.0, np.nan, out)

            return _div
        def _pow(env, fl=fl, fr=fr):
            with np.errstate(all="ignore"):
                a = fl(env)
                b = fr(env)
                out = np.power(a, b)
            return np.where((a == 0.0) & (b < 0.0), np.nan, out)

        return _pow
    if isinstance(node, Call):
        fns = [compile_batch(a) for a in node.args]
        if node.fn == "min":
            return lambda env: np.minimum(fns[0](env), fns[1](env))
        if node.fn == "max":
            return lambda env: np.maximum(fns[0](env), fns[1](env))
        uf = _NP_UNARY_FN[node.fn]
        f0 = fns[0]
        if node.fn == "artanh":
            def _artanh(env, f0=f0):
                with np.errstate(all="ignore"):
                    x = f0(env)
                    out = np.arctanh(x)
                return np.where(np.abs(x) >= 1.0, np.nan, out)

            return _artanh

        def _call(env, f0=f0, uf=uf):
            with np.errstate(all="ignore"):
                return uf(f0(env))

        return _call
    fl = compile_batch(node.lhs)
    fr = compile_batch(node.rhs)
    ft = compile_batch(node.then)
    fe = compile_batch(node.orelse)
    cmp = _NP_CMP[node.cmp]

    def _ifexpr(env):
        with np.errstate(all="ignore"):
            a = np.asarray(fl(env), dtype=np.float64)
            b = np.asarray(fr(env), dtype=np.float64)
            out = np.where(cmp(a, b), ft(env), fe(env))
        bad = ~(np.isfinite(a) & np.isfinite(b))
        if np.any(bad):
            out = np.where(bad, np.nan, out)
        return out

    return _ifexpr


# ---------------------------------------------------------------------------
# Substitution (used to build composites like h2(h1(x)) or E(H^-1(x)))

def substitute(node: Node, mapping: dict[str, Node]) -> Node:
    if isinstance(node, Const):
        return node
    if isinstance(node, Var):
        return mapping.get(node.name, node)
    if isinstance(node, Unary):
        return Unary(node.op, substitute(node.operand, mapping))
    if isinstance(node, Binary):
        return Binary(node.op, substitute(node.lhs, mapping), substitute(node.rhs, mapping))
    if isinstance(node, Call):
        return Call(node.fn, tuple(substitute(a, mapping) for a in node.args))
    return IfExpr(
        node.cmp,
        substitute(node.lhs, mapping),
        substitute(node.rhs, mapping),
        substitute(node.then, mapping),
        substitute(node.orelse, mapping),
    )


# ---------------------------------------------------------------------------
# Semantic wrappers

def point_vars(k: int) -> tuple[str, ...]:
    return tuple(f"x{i + 1}" for i in range(k))


def _env_from_coords(names, coords) -> dict:
    return {name: float(c) for name, c in zip(names, coords)}


def _batch_env(names, X: np.ndarray) -> dict:
    return {name: X[:, j] for j, name in enumerate(names)}


@dataclass(frozen=True)
class ScalarFn:
    """Real-valued function of point coordinates x1..xk."""

    expr: Expr
    label: str = ""

    @classmethod
    def from_source(cls, src: str, nvars: int, label: str = "") -> "ScalarFn":
        return cls(parse(src, point_vars(nvars)), label or src)

    @property
    def nvars(self) -> int:
        return len(self.expr.variables)

    def __call__(self, coords) -> float:
        return evaluate(self.expr, _env_from_coords(self.expr.variables, coords))

    def eval_batch(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(
            self.expr._batch_fn(_batch_env(self.expr.variables, X)), dtype=np.float64
        ) + np.zeros(X.shape[0])

    def source(self) -> str:
        return expr_to_source(self.expr)


@dataclass(frozen=True)
class EndoMap:
    """Coordinate remap given by one component expression per coordinate."""

    exprs: tuple[Expr, ...]
    label: str = ""

    @classmethod
    def from_source(cls, srcs, nvars: int, label: str = "") -> "EndoMap":
        if isinstance(srcs, str):
            srcs = [srcs]
        exprs = tuple(parse(s, point_vars(nvars)) for s in srcs)
        return cls(exprs, label or "; ".join(srcs))

    @classmethod
    def identity(cls, nvars: int) -> "EndoMap":
        names = point_vars(nvars)
        return cls(tuple(Expr(Var(n), names) for n in names), "identity")

    @property
    def nvars(self) -> int:
        return len(self.exprs[0].variables)

    def __call__(self, coords) -> tuple[float, ...]:
        env = _env_from_coords(self.exprs[0].variables, coords)
        return tuple(evaluate(e, env) for e in self.exprs)

    def eval_batch(self, X: np.ndarray) -> np.ndarray:
        env = _batch_env(self.exprs[0].variables, X)
        cols = [
            np.asarray(e._batch_fn(env), dtype=np.float64) + np.zeros(X.shape[0])
            for e in self.exprs
        ]
        return np.stack(cols, axis=1)

    def sources(self) -> list[str]:
        return [expr_to_source(e) for e in self.exprs]


@dataclass(frozen=True)
class Bifunction:
    """Two-argument gap function over variables a, b."""

    expr: Expr
    label: str = ""

    @classmethod
    def from_source(cls, src: str, label: str = "") -> "Bifunction":
        return cls(parse(src, ("a", "b")), label or src)

    @classmethod
    def difference(cls) -> "Bifunction":
        return cls.from_source("a - b", "difference")

    def __call__(self, a: float, b: float) -> float:
        return evaluate(self.expr, {"a": float(a), "b": float(b)})

    def eval_batch(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        out = self.expr._batch_fn({"a": A, "b": B})
        return np.asarray(out, dtype=np.float64) + np.zeros(np.shape(A))

    def source(self) -> str:
        return expr_to_source(self.expr)


# ---------------------------------------------------------------------------
# Numeric differentiation

def differentiate_numeric(f: ScalarFn, at, direction) -> float:
    """Central-difference directional derivative.

    Step is max(1e-6, 1e-6 * |at|); exact (to rounding) for polynomials of
    degree <= 2, O(step^2) error for C^3 functions.
    """
    coords = getattr(at, "coords", at)
    x = np.asarray(coords, dtype=np.float64)
    v = np.asarray(direction, dtype=np.float64)
    step = max(1e-6, 1e-6 * float(np.linalg.norm(x)))
    hi = f(tuple(x + step * v))
    lo = f(tuple(x - step * v))
    return (hi - lo) / (2.0 * step)


def directional_derivative_batch(f: ScalarFn, X: np.ndarray, V: np.ndarray) -> np.ndarray:
    steps = np.maximum(1e-6, 1e-6 * np.linalg.norm(X, axis=1))
    hi = f.eval_batch(X + steps[:, None] * V)
    lo = f.eval_batch(X - steps[:, None] * V)
    return (hi - lo) / (2.0 * steps)


# ---------------------------------------------------------------------------
# Builders for combined functions

def scale_fn(c: float, f: ScalarFn) -> ScalarFn:
    root = Binary("*", Const(float(c)), f.expr.root)
    return ScalarFn(Expr(root, f.expr.variables), f"{c!r}*({f.label})")


def add_fns(f: ScalarFn, g: ScalarFn) -> ScalarFn:
    root = Binary("+", f.expr.root, g.expr.root)
    return ScalarFn(Expr(root, f.expr.variables), f"({f.label})+({g.label})")


def max_fns(fns) -> ScalarFn:
    fns = list(fns)
    root = fns[0].expr.root
    for g in fns[1:]:
        root = Call("max", (root, g.expr.root))
    return ScalarFn(Expr(root, fns[0].expr.variables), "max family")


def weighted_sum_fns(fns, weights) -> ScalarFn:
    fns = list(fns)
    root = Binary("*", Const(float(weights[0])), fns[0].expr.root)
    for g, w in zip(fns[1:], weights[1:]):
        root = Binary("+", root, Binary("*", Const(float(w)), g.expr.root))
    return ScalarFn(Expr(root, fns[0].expr.variables), "weighted sum")


def compose_scalar(outer: ScalarFn, inner: ScalarFn) -> ScalarFn:
    """outer(inner(x)) for a one-variable outer function."""
    if outer.nvars != 1:
        raise ValueError("outer function must take a single variable")
    root = substitute(outer.expr.root, {outer.expr.variables[0]: inner.expr.root})
    return ScalarFn(Expr(root, inner.expr.variables), f"({outer.label})o({inner.label})")


def compose_endomaps(outer: EndoMap, inner: EndoMap) -> EndoMap:
    """outer(inner(x)), both maps on the same coordinate count."""
    names = inner.exprs[0].variables
    mapping = {name: e.root for name, e in zip(names, inner.exprs)}
    exprs = tuple(
        Expr(substitute(e.root, mapping), names) for e in outer.exprs
    )
    return EndoMap(exprs, f"({outer.label})o({inner.label})")


def add_bifunctions(parts) -> Bifunction:
    parts = list(parts)
    root = parts[0].expr.root
    for p in parts[1:]:
        root = Binary("+", root, p.expr.root)
    return Bifunction(Expr(root, ("a", "b")), "sum of gaps")
