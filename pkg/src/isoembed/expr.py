"""Metric formula parsing, evaluation and symbolic differentiation.

Formulas are written over the geodesic coordinates ``uhat`` and ``vhat``
(aliases ``u1`` and ``u2``), e.g. ``"exp(2*uhat)"`` or ``"cos(uhat)^2"``.

Grammar (precedence from loosest to tightest)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('-' | '+') unary | power
    power  := atom ('^' unary)?          # right associative
    atom   := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'

Expressions are immutable trees. ``evaluate`` is the checked reference
evaluator; ``Expression.compile`` produces a fast vectorized callable and
``Expression.jit`` a numba-compiled scalar kernel for inner loops.
"""
from __future__ import annotations

import functools
import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import ExprDomainError, ExprSyntaxError, UnknownIdentifierError

VARIABLES = ("uhat", "vhat")
ALIASES = {"uhat": "uhat", "vhat": "vhat", "u1": "uhat", "u2": "vhat"}
FUNCTIONS = ("exp", "log", "sin", "cos", "cosh", "sinh", "sqrt")

_PREC_ADD, _PREC_MUL, _PREC_NEG, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 5


class Expression:
    """Base class of all AST nodes."""

    __slots__ = ()
    prec = _PREC_ATOM

    def __call__(self, uhat, vhat):
        return evaluate(self, (uhat, vhat))

    def __str__(self):
        return render(self)

    def derive(self, var):
        return derive(self, var)

    def compile(self):
        """Vectorized numpy callable ``f(uhat, vhat)`` without domain checks."""
        return _compile_numpy(render(self))

    def jit(self):
        """numba-compiled scalar kernel ``f(uhat, vhat) -> float``."""
        return _compile_numba(render(self))

    @property
    def is_constant(self):
        return not _free_vars(self)


@dataclass(frozen=True)
class Num(Expression):
    value: float

    @property
    def prec(self):
        return _PREC_NEG if math.copysign(1.0, self.value) < 0 else _PREC_ATOM


@dataclass(frozen=True)
class Var(Expression):
    name: str


@dataclass(frozen=True)
class Neg(Expression):
    arg: Expression
    prec = _PREC_NEG


@dataclass(frozen=True)
class BinOp(Expression):
    op: str
    left: Expression
    right: Expression

    @property
    def prec(self):
        return {"+": _PREC_ADD, "-": _PREC_ADD, "*": _PREC_MUL, "/": _PREC_MUL, "^": _PREC_POW}[self.op]


@dataclass(frozen=True)
class Call(Expression):
    fn: str
    arg: Expression


# ---------------------------------------------------------------- parsing

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))"
)


def _tokenize(text):
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    def __init__(self, text):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, text, off = self.take()
        if text != value or kind != "op":
            raise ExprSyntaxError(f"expected {value!r}, found {text or 'end of input'!r}", off)

    def parse(self):
        node = self.expr()
        kind, text, off = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected token {text!r}", off)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        kind, text, _ = self.peek()
        if kind == "op" and text == "-":
            self.take()
            return Neg(self.unary())
        if kind == "op" and text == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        kind, text, off = self.take()
        if kind == "num":
            return Num(float(text))
        if kind == "name":
            if text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(text, arg)
            if text in ALIASES:
                return Var(ALIASES[text])
            raise UnknownIdentifierError(text, off)
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect(")")
            return node
        raise ExprSyntaxError(f"unexpected {text or 'end of input'!r}", off)


def parse(text):
    """Parse a formula string into an :class:`Expression`."""
    if not text or not text.strip():
        raise ExprSyntaxError("empty formula", 0)
    return _Parser(text).parse()


# -------------------------------------------------------------- rendering

def _fmt_num(x):
    if x == int(x) and abs(x) < 1e15:
        s = str(int(x))
        return "-0" if s == "0" and math.copysign(1.0, x) < 0 else s
    return repr(x)


def render(e):
    """Text form that re-parses to an evaluation-equivalent tree."""
    if isinstance(e, Num):
        return _fmt_num(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Call):
        return f"{e.fn}({render(e.arg)})"
    if isinstance(e, Neg):
        return "-" + _wrap(e.arg, _PREC_NEG)
    if isinstance(e, BinOp):
        if e.op in "+-":
            return f"{_wrap(e.left, _PREC_ADD)} {e.op} {_wrap(e.right, _PREC_MUL)}"
        if e.op in "*/":
            return f"{_wrap(e.left, _PREC_MUL)}{e.op}{_wrap(e.right, _PREC_NEG)}"
        return f"{_wrap(e.left, _PREC_ATOM)}^{_wrap(e.right, _PREC_NEG)}"
    raise TypeError(f"not an expression: {e!r}")


def _wrap(e, min_prec):
    s = render(e)
    return s if e.prec >= min_prec else f"({s})"


# ------------------------------------------------------------- evaluation

def _check(value, what, node):
    if not math.isfinite(value):
        raise ExprDomainError(f"non-finite result ({what})", render(node))
    return value


def evaluate(e, p):
    """Checked evaluation of ``e`` at ``p = (uhat, vhat)``."""
    env = {"uhat": float(p[0]), "vhat": float(p[1])}
    return _eval(e, env)


def _eval(e, env):
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        return env[e.name]
    if isinstance(e, Neg):
        return -_eval(e.arg, env)
    if isinstance(e, BinOp):
        a = _eval(e.left, env)
        b = _eval(e.right, env)
        if e.op == "+":
            return _check(a + b, "overflow", e)
        if e.op == "-":
            return _check(a - b, "overflow", e)
        if e.op == "*":
            return _check(a * b, "overflow", e)
        if e.op == "/":
            if b == 0.0:
                raise ExprDomainError("division by zero", render(e))
            return _check(a / b, "overflow", e)
        if a < 0 and b != int(b):
            raise ExprDomainError("negative base with non-integer exponent", render(e))
        if a == 0 and b < 0:
            raise ExprDomainError("zero to a negative power", render(e))
        try:
            return _check(math.pow(a, b), "overflow", e)
        except OverflowError:
            raise ExprDomainError("overflow", render(e)) from None
    if isinstance(e, Call):
        x = _eval(e.arg, env)
        if e.fn == "log" and x <= 0:
            raise ExprDomainError("log of non-positive value", render(e))
        if e.fn == "sqrt" and x < 0:
            raise ExprDomainError("sqrt of negative value", render(e))
        try:
            return _check(getattr(math, e.fn)(x), "overflow", e)
        except OverflowError:
            raise ExprDomainError("overflow", render(e)) from None
    raise TypeError(f"not an expression: {e!r}")


def _free_vars(e):
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Num):
        return set()
    if isinstance(e, (Neg, Call)):
        return _free_vars(e.arg)
    return _free_vars(e.left) | _free_vars(e.right)


# -------------------------------------------------------- differentiation

ZERO, ONE = Num(0.0), Num(1.0)


def _add(a, b):
    if a == ZERO:
        return b
    if b == ZERO:
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value + b.value)
    return BinOp("+", a, b)


def _sub(a, b):
    if b == ZERO:
        return a
    if a == ZERO:
        return _neg(b)
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value - b.value)
    return BinOp("-", a, b)


def _mul(a, b):
    if a == ZERO or b == ZERO:
        return ZERO
    if a == ONE:
        return b
    if b == ONE:
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value * b.value)
    return BinOp("*", a, b)


def _div(a, b):
    if a == ZERO:
        return ZERO
    if b == ONE:
        return a
    return BinOp("/", a, b)


def _neg(a):
    if isinstance(a, Num):
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def _pow(a, c):
    if c == ZERO:
        return ONE
    if c == ONE:
        return a
    return BinOp("^", a, c)


def derive(e, var):
    """Symbolic partial derivative of ``e`` with respect to ``var``."""
    var = ALIASES.get(var, var)
    if var not in VARIABLES:
        raise ValueError(f"unknown variable {var!r}")
    return _d(e, var)


def _d(e, var):
    if isinstance(e, Num):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.name == var else ZERO
    if isinstance(e, Neg):
        return _neg(_d(e.arg, var))
    if isinstance(e, BinOp):
        a, b = e.left, e.right
        da, db = _d(a, var), _d(b, var)
        if e.op == "+":
            return _add(da, db)
        if e.op == "-":
            return _sub(da, db)
        if e.op == "*":
            return _add(_mul(da, b), _mul(a, db))
        if e.op == "/":
            return _div(_sub(_mul(da, b), _mul(a, db)), _pow(b, Num(2.0)))
        # power
        if var not in _free_vars(b):
            return _mul(_mul(b, _pow(a, _sub(b, ONE))), da)
        # general exponent: a^b * (b' log a + b a'/a)
        return _mul(e, _add(_mul(db, Call("log", a)), _div(_mul(b, da), a)))
    if isinstance(e, Call):
        x = e.arg
        dx = _d(x, var)
        if dx == ZERO:
            return ZERO
        outer = {
            "exp": lambda: Call("exp", x),
            "log": lambda: _div(ONE, x),
            "sin": lambda: Call("cos", x),
            "cos": lambda: _neg(Call("sin", x)),
            "cosh": lambda: Call("sinh", x),
            "sinh": lambda: Call("cosh", x),
            "sqrt": lambda: _div(ONE, _mul(Num(2.0), Call("sqrt", x))),
        }[e.fn]()
        return _mul(outer, dx)
    raise TypeError(f"not an expression: {e!r}")


# ------------------------------------------------------------ compilation

def _source(e):
    if isinstance(e, Num):
        return repr(float(e.value))
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        return f"(-{_source(e.arg)})"
    if isinstance(e, BinOp):
        op = "**" if e.op == "^" else e.op
        return f"({_source(e.left)} {op} {_source(e.right)})"
    return f"np.{e.fn}({_source(e.arg)})"


def _build(text):
    e = parse(text)
    src = f"def _f(uhat, vhat):\n    return {_source(e)}\n"
    ns = {"np": np}
    exec(src, ns)
    return ns["_f"], e.is_constant


@functools.lru_cache(maxsize=256)
def _compile_numpy(text):
    raw, const = _build(text)

    def f(uhat, vhat):
        uhat = np.asarray(uhat, dtype=float)
        vhat = np.asarray(vhat, dtype=float)
        with np.errstate(all="ignore"):
            out = raw(uhat, vhat)
        shape = np.broadcast_shapes(uhat.shape, vhat.shape)
        out = np.broadcast_to(np.asarray(out, dtype=float), shape)
        return out.copy() if shape else float(out)

    f.source = text
    return f


@functools.lru_cache(maxsize=256)
def _compile_numba(text):
    import numba

    raw, _ = _build(text)
    return numba.njit(cache=False, error_model="numpy")(raw)
