"""Coefficient expressions in chart coordinates, evaluated as exact 2-jets.

Grammar (lowest to highest precedence)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | '+' unary | power
    power   := atom ('^' unary)?          # right associative
    atom    := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'

Names are the base coordinates ``x1 .. xm``, the constants ``pi`` and ``e``,
and the one-argument functions listed in :data:`FUNCTIONS`.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

__all__ = [
    "ExprError",
    "ParseError",
    "UnknownIdentifierError",
    "ArityError",
    "DomainError",
    "Num",
    "Var",
    "Neg",
    "Add",
    "Sub",
    "Mul",
    "Div",
    "Pow",
    "Call",
    "Expr",
    "Jet2",
    "parse",
    "to_source",
    "eval_jet2",
    "eval_value",
    "max_var_index",
    "FUNCTIONS",
]


class ExprError(ValueError):
    """Base class for expression errors."""


class ParseError(ExprError):
    def __init__(self, message: str, offset: int, src: str = ""):
        self.offset = offset
        self.src = src
        super().__init__(f"{message} at offset {offset}")


class UnknownIdentifierError(ParseError):
    pass


class ArityError(ParseError):
    pass


class DomainError(ExprError):
    def __init__(self, message: str, location: str):
        self.location = location
        super().__init__(f"{message} in '{location}'")


# ---------------------------------------------------------------- tree nodes


@dataclass(frozen=True)
class Num:
    value: float
    name: str | None = None  # 'pi' / 'e' when parsed from a constant


@dataclass(frozen=True)
class Var:
    index: int  # 0-based coordinate index; source name is x{index+1}


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class Add:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Sub:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Mul:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Div:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: "Expr"


@dataclass(frozen=True)
class Call:
    fn: str
    arg: "Expr"


Expr = Union[Num, Var, Neg, Add, Sub, Mul, Div, Pow, Call]

CONSTANTS = {"pi": math.pi, "e": math.e}


def _d_tan(u):
    c = math.cos(u)
    return 1.0 / (c * c)


def _dd_tan(u):
    c = math.cos(u)
    return 2.0 * math.tan(u) / (c * c)


def _d_tanh(u):
    t = math.tanh(u)
    return 1.0 - t * t


def _dd_tanh(u):
    t = math.tanh(u)
    return -2.0 * t * (1.0 - t * t)


# name -> (f, f', f'', domain check or None)
FUNCTIONS: dict[str, tuple[Callable, Callable, Callable, Callable | None]] = {
    "sin": (math.sin, math.cos, lambda u: -math.sin(u), None),
    "cos": (math.cos, lambda u: -math.sin(u), lambda u: -math.cos(u), None),
    "tan": (math.tan, _d_tan, _dd_tan, lambda u: abs(math.cos(u)) > 1e-300),
    "exp": (math.exp, math.exp, math.exp, None),
    "log": (math.log, lambda u: 1.0 / u, lambda u: -1.0 / (u * u), lambda u: u > 0.0),
    "sqrt": (
        math.sqrt,
        lambda u: 0.5 / math.sqrt(u),
        lambda u: -0.25 / (u * math.sqrt(u)),
        lambda u: u > 0.0,
    ),
    "sinh": (math.sinh, math.cosh, math.sinh, None),
    "cosh": (math.cosh, math.sinh, math.cosh, None),
    "tanh": (math.tanh, _d_tanh, _dd_tanh, None),
    "atan": (
        math.atan,
        lambda u: 1.0 / (1.0 + u * u),
        lambda u: -2.0 * u / (1.0 + u * u) ** 2,
        None,
    ),
}


# ------------------------------------------------------------------- parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^(),]))"
)
_VAR = re.compile(r"x([1-9][0-9]*)$")


def _tokenize(src: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    n = len(src)
    while pos < n:
        if src[pos:].strip() == "":
            break
        m = _TOKEN.match(src, pos)
        if m is None:
            # report the first non-blank character
            bad = pos + (len(src[pos:]) - len(src[pos:].lstrip()))
            raise ParseError(f"unexpected character {src[bad]!r}", bad, src)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(src)))
    return tokens


class _Parser:
    def __init__(self, src: str, dim: int | None):
        self.src = src
        self.dim = dim
        self.toks = _tokenize(src)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, text, off = self.peek()
        if kind != "op" or text != value:
            what = "end of input" if kind == "end" else repr(text)
            raise ParseError(f"expected {value!r}, found {what}", off, self.src)
        self.take()

    def parse(self) -> Expr:
        e = self.expr()
        kind, text, off = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected {text!r}", off, self.src)
        return e

    def expr(self) -> Expr:
        left = self.term()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "+-":
                self.take()
                right = self.term()
                left = Add(left, right) if text == "+" else Sub(left, right)
            else:
                return left

    def term(self) -> Expr:
        left = self.unary()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "*/":
                self.take()
                right = self.unary()
                left = Mul(left, right) if text == "*" else Div(left, right)
            else:
                return left

    def unary(self) -> Expr:
        kind, text, _ = self.peek()
        if kind == "op" and text == "-":
            self.take()
            return Neg(self.unary())
        if kind == "op" and text == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        kind, text, _ = self.peek()
        if kind == "op" and text == "^":
            self.take()
            return Pow(base, self.unary())
        return base

    def atom(self) -> Expr:
        kind, text, off = self.take()
        if kind == "num":
            return Num(float(text))
        if kind == "name":
            nxt = self.peek()
            is_call = nxt[0] == "op" and nxt[1] == "("
            if text in FUNCTIONS:
                if not is_call:
                    raise ArityError(f"function {text!r} needs one argument", off, self.src)
                self.take()
                k2, t2, o2 = self.peek()
                if k2 == "op" and t2 == ")":
                    raise ArityError(f"function {text!r} takes exactly one argument", o2, self.src)
                arg = self.expr()
                k2, t2, o2 = self.peek()
                if k2 == "op" and t2 == ",":
                    raise ArityError(f"function {text!r} takes exactly one argument", o2, self.src)
                self.expect(")")
                return Call(text, arg)
            if is_call:
                raise UnknownIdentifierError(f"unknown function {text!r}", off, self.src)
            if text in CONSTANTS:
                return Num(CONSTANTS[text], text)
            m = _VAR.match(text)
            if m:
                idx = int(m.group(1)) - 1
                if self.dim is not None and idx >= self.dim:
                    raise UnknownIdentifierError(
                        f"coordinate {text!r} exceeds dimension {self.dim}", off, self.src
                    )
                return Var(idx)
            raise UnknownIdentifierError(f"unknown identifier {text!r}", off, self.src)
        if kind == "op" and text == "(":
            e = self.expr()
            self.expect(")")
            return e
        what = "end of input" if kind == "end" else repr(text)
        raise ParseError(f"unexpected {what}", off, self.src)


def parse(src: str, dim: int | None = None) -> Expr:
    """Parse ``src`` into an expression tree.

    If ``dim`` is given, coordinates beyond ``x{dim}`` are rejected.
    """
    if not isinstance(src, str) or not src.strip():
        raise ParseError("empty expression", 0, src if isinstance(src, str) else "")
    return _Parser(src, dim).parse()


def to_source(e: Expr) -> str:
    """Print ``e`` back to parseable text (fully parenthesised)."""
    if isinstance(e, Num):
        if e.name is not None:
            return e.name
        return repr(float(e.value))
    if isinstance(e, Var):
        return f"x{e.index + 1}"
    if isinstance(e, Neg):
        return f"(-{to_source(e.arg)})"
    if isinstance(e, Call):
        return f"{e.fn}({to_source(e.arg)})"
    if isinstance(e, Pow):
        return f"({to_source(e.base)}^{to_source(e.exponent)})"
    op = {Add: "+", Sub: "-", Mul: "*", Div: "/"}[type(e)]
    return f"({to_source(e.left)} {op} {to_source(e.right)})"


def max_var_index(e: Expr) -> int:
    """Largest 0-based coordinate index used in ``e`` (-1 if none)."""
    if isinstance(e, Var):
        return e.index
    if isinstance(e, Num):
        return -1
    if isinstance(e, (Neg,)):
        return max_var_index(e.arg)
    if isinstance(e, Call):
        return max_var_index(e.arg)
    if isinstance(e, Pow):
        return max(max_var_index(e.base), max_var_index(e.exponent))
    return max(max_var_index(e.left), max_var_index(e.right))


# ---------------------------------------------------------------- evaluation


@dataclass(frozen=True)
class Jet2:
    """Value, gradient and Hessian of a scalar at a point."""

    value: float
    grad: np.ndarray
    hess: np.ndarray

    def __add__(self, other: "Jet2") -> "Jet2":
        return Jet2(self.value + other.value, self.grad + other.grad, self.hess + other.hess)

    def scale(self, a: float) -> "Jet2":
        return Jet2(a * self.value, a * self.grad, a * self.hess)


def _const(c: float, m: int):
    return (c, np.zeros(m), np.zeros((m, m)))


def _is_int_literal(e: Expr) -> int | None:
    if isinstance(e, Num) and e.name is None and float(e.value).is_integer():
        return int(e.value)
    if isinstance(e, Neg):
        k = _is_int_literal(e.arg)
        return None if k is None else -k
    return None


def _chain(u, f0, f1, f2):
    v, g, h = u
    return (f0, f1 * g, f2 * np.outer(g, g) + f1 * h)


def _jet(e: Expr, x: np.ndarray, m: int):
    if isinstance(e, Num):
        return _const(e.value, m)
    if isinstance(e, Var):
        if e.index >= m:
            raise DomainError(f"coordinate x{e.index + 1} outside point of dimension {m}", to_source(e))
        g = np.zeros(m)
        g[e.index] = 1.0
        return (float(x[e.index]), g, np.zeros((m, m)))
    if isinstance(e, Neg):
        v, g, h = _jet(e.arg, x, m)
        return (-v, -g, -h)
    if isinstance(e, (Add, Sub)):
        a = _jet(e.left, x, m)
        b = _jet(e.right, x, m)
        if isinstance(e, Add):
            return (a[0] + b[0], a[1] + b[1], a[2] + b[2])
        return (a[0] - b[0], a[1] - b[1], a[2] - b[2])
    if isinstance(e, Mul):
        a = _jet(e.left, x, m)
        b = _jet(e.right, x, m)
        cross = np.outer(a[1], b[1])
        return (a[0] * b[0], a[0] * b[1] + b[0] * a[1], a[0] * b[2] + b[0] * a[2] + cross + cross.T)
    if isinstance(e, Div):
        a = _jet(e.left, x, m)
        b = _jet(e.right, x, m)
        if b[0] == 0.0:
            raise DomainError("division by zero", to_source(e))
        r = _chain(b, 1.0 / b[0], -1.0 / b[0] ** 2, 2.0 / b[0] ** 3)
        cross = np.outer(a[1], r[1])
        return (a[0] * r[0], a[0] * r[1] + r[0] * a[1], a[0] * r[2] + r[0] * a[2] + cross + cross.T)
    if isinstance(e, Call):
        f, f1, f2, ok = FUNCTIONS[e.fn]
        u = _jet(e.arg, x, m)
        if ok is not None and not ok(u[0]):
            raise DomainError(f"{e.fn} of out-of-domain value {u[0]!r}", to_source(e))
        try:
            return _chain(u, f(u[0]), f1(u[0]), f2(u[0]))
        except (ValueError, OverflowError, ZeroDivisionError) as exc:
            raise DomainError(str(exc), to_source(e)) from exc
    if isinstance(e, Pow):
        k = _is_int_literal(e.exponent)
        u = _jet(e.base, x, m)
        if k is not None:
            if k == 0:
                return _const(1.0, m)
            if k < 0 and u[0] == 0.0:
                raise DomainError("zero to a negative power", to_source(e))
            b = u[0]
            f0 = b**k
            f1 = k * b ** (k - 1) if k != 1 else 1.0
            f2 = k * (k - 1) * b ** (k - 2) if k not in (0, 1) else 0.0
            return _chain(u, f0, f1, f2)
        if u[0] <= 0.0:
            raise DomainError("non-integer power of non-positive base", to_source(e))
        w = _jet(e.exponent, x, m)
        # a^b = exp(b log a)
        lg = _chain(u, math.log(u[0]), 1.0 / u[0], -1.0 / u[0] ** 2)
        cross = np.outer(w[1], lg[1])
        prod = (w[0] * lg[0], w[0] * lg[1] + lg[0] * w[1], w[0] * lg[2] + lg[0] * w[2] + cross + cross.T)
        ev = math.exp(prod[0])
        return _chain(prod, ev, ev, ev)
    raise TypeError(f"not an expression node: {e!r}")


def eval_jet2(e: Expr, x) -> Jet2:
    """Exact value, gradient and Hessian of ``e`` at ``x``."""
    x = np.asarray(x, dtype=float).reshape(-1)
    v, g, h = _jet(e, x, x.size)
    h = 0.5 * (h + h.T)
    return Jet2(float(v), g, h)


def eval_value(e: Expr, x) -> float:
    """Plain value of ``e`` at ``x`` (no derivatives)."""
    return eval_jet2(e, x).value
