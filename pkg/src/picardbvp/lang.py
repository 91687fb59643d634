"""Expression language for problem right-hand sides, seeds and exact solutions.

Grammar (ASCII, loosest binding first)::

    expr    := term (('+' | '-') term)*
    term    := factor (('*' | '/') factor)*
    factor  := '-' factor | power
    power   := primary ('^' primary)?
    primary := NUMBER | NAME | NAME '(' expr ')' | 'D' '[' AXIS ']' '(' expr ')'
             | '(' expr ')'

Identifiers resolve in this order: the constant table (plus ``pi``), the
coordinates ``t`` and ``x``, derivative references such as ``u_x`` or
``u_tt``, and finally state variables.  Exponents must fold to a literal
non-negative integer.

Three evaluators walk the tree: :func:`eval_numeric` (plain floats or numpy
arrays), :func:`expand_seed` (univariate series of boundary/initial data) and
:func:`eval_rhs` (bivariate series over the current iterate).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Mapping, Union

import numpy as np

from . import series as S
from .series import Frame, Series1, Series2

FUNCTIONS = S.ANALYTIC
DERIV_AXES = ("t", "x", "tt", "xx", "tx")
BUILTIN_CONSTANTS = {"pi": math.pi}


class ExprError(ValueError):
    """Raised for malformed expressions or illegal uses of a node."""


class ParseError(ExprError):
    def __init__(self, text: str, pos: int, message: str):
        self.text = text
        self.pos = pos
        self.message = message
        self.diagnostics = [(pos, message)]
        super().__init__(f"{message} at column {pos + 1}: {text!r}")


# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Number:
    value: float


@dataclass(frozen=True)
class Const:
    name: str
    value: float


@dataclass(frozen=True)
class Var:
    axis: str


@dataclass(frozen=True)
class StateRef:
    name: str


@dataclass(frozen=True)
class DerivRef:
    name: str
    axis: str


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
class PowInt:
    base: "Expr"
    n: int


@dataclass(frozen=True)
class Func:
    name: str
    arg: "Expr"


@dataclass(frozen=True)
class Deriv:
    """Derivative of a whole subexpression, written ``D[x](...)``."""

    arg: "Expr"
    axis: str


Expr = Union[Number, Const, Var, StateRef, DerivRef, Neg, Add, Sub, Mul, Div, PowInt, Func, Deriv]

_BINARY = {Add: "+", Sub: "-", Mul: "*", Div: "/"}


def _norm_axis(axis: str) -> str | None:
    if axis == "xt":
        return "tx"
    return axis if axis in DERIV_AXES else None


def walk(e: Expr):
    """Yield every node of ``e`` in prefix order."""
    yield e
    for child in _children(e):
        yield from walk(child)


def _children(e: Expr) -> tuple:
    if isinstance(e, (Add, Sub, Mul, Div)):
        return (e.left, e.right)
    if isinstance(e, (Neg, Func, Deriv)):
        return (e.arg,)
    if isinstance(e, PowInt):
        return (e.base,)
    return ()


def state_names(e: Expr) -> set[str]:
    """Names of state variables referenced directly or through derivatives."""
    return {n.name for n in walk(e) if isinstance(n, (StateRef, DerivRef))}


def free_axes(e: Expr) -> set[str]:
    return {n.axis for n in walk(e) if isinstance(n, Var)}


# ---------------------------------------------------------------------------
# tokenizer and parser

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^()\[\]]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            bad = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ParseError(text, bad, f"unexpected character {text[bad]!r}")
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, constants: Mapping[str, float]):
        self.text = text
        self.constants = {**BUILTIN_CONSTANTS, **constants}
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message: str, tok=None):
        tok = tok or self.peek()
        return ParseError(self.text, min(tok[2], max(len(self.text) - 1, 0)), message)

    def expect(self, op: str):
        tok = self.take()
        if tok[:2] != ("op", op):
            raise self.error(f"expected {op!r}", tok)
        return tok

    def parse(self) -> Expr:
        if self.peek()[0] == "end":
            raise self.error("empty expression")
        e = self.expr()
        if self.peek()[0] != "end":
            raise self.error(f"unexpected {self.peek()[1]!r}")
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.peek()[:2] in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            rhs = self.term()
            e = Add(e, rhs) if op == "+" else Sub(e, rhs)
        return e

    def term(self) -> Expr:
        e = self.factor()
        while self.peek()[:2] in (("op", "*"), ("op", "/")):
            op = self.take()[1]
            rhs = self.factor()
            e = Mul(e, rhs) if op == "*" else Div(e, rhs)
        return e

    def factor(self) -> Expr:
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return Neg(self.factor())
        return self.power()

    def power(self) -> Expr:
        base = self.primary()
        if self.peek()[:2] != ("op", "^"):
            return base
        caret = self.take()
        if self.peek()[:2] == ("op", "-"):
            raise self.error("negative exponents are not allowed; divide instead")
        exponent = self.primary()
        n = fold_constant(exponent)
        if n is None:
            raise self.error("exponent must be a constant", caret)
        if n < 0 or n != int(n):
            raise self.error(f"exponent must be a non-negative integer, got {n:g}", caret)
        return PowInt(base, int(n))

    def primary(self) -> Expr:
        tok = self.take()
        kind, val, _ = tok
        if kind == "num":
            return Number(float(val))
        if kind == "op" and val == "(":
            e = self.expr()
            self.expect(")")
            return e
        if kind == "name":
            return self.name(tok)
        if kind == "end":
            raise self.error("unexpected end of expression", tok)
        raise self.error(f"unexpected {val!r}", tok)

    def name(self, tok) -> Expr:
        val = tok[1]
        nxt = self.peek()[:2]
        if val == "D" and nxt == ("op", "["):
            self.take()
            ax_tok = self.take()
            axis = _norm_axis(ax_tok[1]) if ax_tok[0] == "name" else None
            if axis is None:
                raise self.error("derivative axis must be one of t, x, tt, xx, tx", ax_tok)
            self.expect("]")
            self.expect("(")
            arg = self.expr()
            self.expect(")")
            return Deriv(arg, axis)
        if nxt == ("op", "("):
            if val not in FUNCTIONS:
                raise self.error(f"unknown function {val!r}", tok)
            self.take()
            arg = self.expr()
            self.expect(")")
            return Func(val, arg)
        if val in self.constants:
            return Const(val, float(self.constants[val]))
        if val in ("t", "x"):
            return Var(val)
        head, sep, suffix = val.rpartition("_")
        if sep and head and _norm_axis(suffix):
            return DerivRef(head, _norm_axis(suffix))
        return StateRef(val)


def parse_expr(text: str, constants: Mapping[str, float] | None = None) -> Expr:
    """Parse ``text`` into an :data:`Expr`, resolving names against ``constants``."""
    return _Parser(text, constants or {}).parse()


def fold_constant(e: Expr) -> float | None:
    """Numeric value of a constant subexpression, or ``None`` if it varies."""
    if isinstance(e, Number):
        return e.value
    if isinstance(e, Const):
        return e.value
    if free_axes(e) or state_names(e) or any(isinstance(n, Deriv) for n in walk(e)):
        return None
    try:
        return eval_numeric(e, 0.0, 0.0)
    except ExprError:
        return None


# ---------------------------------------------------------------------------
# printing

_PREC = {Add: 1, Sub: 1, Mul: 2, Div: 2, Neg: 3, PowInt: 4}


def _prec(e: Expr) -> int:
    return _PREC.get(type(e), 5)


def _fmt_number(v: float) -> str:
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def to_text(e: Expr) -> str:
    """Render ``e`` so that ``parse_expr(to_text(e))`` rebuilds the same tree."""
    if isinstance(e, Number):
        s = _fmt_number(e.value)
        return f"({s})" if e.value < 0 else s
    if isinstance(e, Const):
        return e.name
    if isinstance(e, Var):
        return e.axis
    if isinstance(e, StateRef):
        return e.name
    if isinstance(e, DerivRef):
        return f"{e.name}_{e.axis}"
    if isinstance(e, Func):
        return f"{e.name}({to_text(e.arg)})"
    if isinstance(e, Deriv):
        return f"D[{e.axis}]({to_text(e.arg)})"
    if isinstance(e, Neg):
        inner = to_text(e.arg)
        return f"-({inner})" if _prec(e.arg) < 3 else f"-{inner}"
    if isinstance(e, PowInt):
        base = to_text(e.base)
        if _prec(e.base) <= 4:
            base = f"({base})"
        return f"{base}^{e.n}"
    level = _prec(e)
    left, right = to_text(e.left), to_text(e.right)
    if _prec(e.left) < level:
        left = f"({left})"
    if _prec(e.right) <= level or isinstance(e.right, Neg):
        right = f"({right})"
    sep = f" {_BINARY[type(e)]} " if level == 1 else _BINARY[type(e)]
    return f"{left}{sep}{right}"


# ---------------------------------------------------------------------------
# numeric evaluation

_NUMPY_FUNCS = {
    "exp": np.exp,
    "sin": np.sin,
    "cos": np.cos,
    "sinh": np.sinh,
    "cosh": np.cosh,
    "atan": np.arctan,
    "sqrt": np.sqrt,
}


def eval_numeric(e: Expr, t, x, state: Mapping[str, float] | None = None):
    """Evaluate at physical coordinates; ``t`` and ``x`` may be numpy arrays."""
    state = state or {}

    def ev(n):
        if isinstance(n, Number):
            return n.value
        if isinstance(n, Const):
            return n.value
        if isinstance(n, Var):
            return t if n.axis == "t" else x
        if isinstance(n, StateRef):
            if n.name not in state:
                raise ExprError(f"unbound name {n.name!r}")
            return state[n.name]
        if isinstance(n, (DerivRef, Deriv)):
            raise ExprError("derivatives cannot be evaluated numerically")
        if isinstance(n, Neg):
            return -ev(n.arg)
        if isinstance(n, Add):
            return ev(n.left) + ev(n.right)
        if isinstance(n, Sub):
            return ev(n.left) - ev(n.right)
        if isinstance(n, Mul):
            return ev(n.left) * ev(n.right)
        if isinstance(n, Div):
            den = ev(n.right)
            if np.any(np.asarray(den) == 0):
                raise ExprError(f"division by zero in {to_text(n)}")
            return ev(n.left) / den
        if isinstance(n, PowInt):
            return ev(n.base) ** n.n
        if isinstance(n, Func):
            with np.errstate(invalid="ignore", over="ignore"):
                return _NUMPY_FUNCS[n.name](ev(n.arg))
        raise ExprError(f"cannot evaluate node {n!r}")

    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        out = ev(e)
    if not np.all(np.isfinite(out)):
        raise ExprError(f"non-finite value evaluating {to_text(e)}")
    return float(out) if np.ndim(out) == 0 else np.asarray(out, dtype=float)


# ---------------------------------------------------------------------------
# seed expansion


def expand_seed(e: Expr, axis: str, deg: int, center: float = 0.0) -> Series1:
    """Taylor-expand an expression of one coordinate about ``center``."""

    def ev(n) -> Series1:
        if isinstance(n, (Number, Const)):
            return Series1.constant(n.value, deg, axis)
        if isinstance(n, Var):
            if n.axis != axis:
                raise ExprError(
                    f"seed along {axis} may not depend on {n.axis}: {to_text(e)}"
                )
            return Series1.variable(deg, axis, center)
        if isinstance(n, (StateRef, DerivRef)):
            raise ExprError(f"seed and target expressions cannot reference state {n.name!r}")
        if isinstance(n, Neg):
            return -ev(n.arg)
        if isinstance(n, Add):
            return ev(n.left) + ev(n.right)
        if isinstance(n, Sub):
            return ev(n.left) - ev(n.right)
        if isinstance(n, Mul):
            return ev(n.left) * ev(n.right)
        if isinstance(n, Div):
            return ev(n.left) * ev(n.right).recip(to_text(n.right))
        if isinstance(n, PowInt):
            return ev(n.base) ** n.n
        if isinstance(n, Func):
            return S.analytic(n.name, ev(n.arg))
        if isinstance(n, Deriv):
            if set(n.axis) != {axis}:
                raise ExprError(f"seed along {axis} cannot be differentiated in {n.axis}")
            out = ev(n.arg)
            for _ in n.axis:
                out = out.diff()
            return out
        raise ExprError(f"cannot expand node {n!r}")

    return ev(e)


# ---------------------------------------------------------------------------
# right-hand-side evaluation over the iterate


def eval_rhs(
    e: Expr,
    env: Mapping[str, Series2],
    evolution_axis: str,
    rhs_table: Mapping[str, Expr],
    frame: Frame,
) -> Series2:
    """Evaluate a polynomial right-hand side on the current iterate.

    A derivative reference along the evolution axis (``u_t`` when evolving
    in ``t``) stands for that variable's own right-hand side and is replaced
    by it, one level deep.  Every other derivative reference, including mixed
    ``u_tx``, differentiates the stored iterate.
    """

    def ev(n, substituting: str | None) -> Series2:
        if isinstance(n, (Number, Const)):
            return frame.constant(n.value)
        if isinstance(n, Var):
            return frame.var(n.axis)
        if isinstance(n, StateRef):
            try:
                return env[n.name]
            except KeyError:
                raise ExprError(f"unbound state variable {n.name!r}") from None
        if isinstance(n, DerivRef):
            if n.axis == evolution_axis:
                if substituting is not None:
                    raise ExprError(
                        f"{n.name}_{n.axis} inside the right-hand side of {substituting!r}: "
                        "substitution is one level deep (cycle or nesting)"
                    )
                if n.name not in rhs_table:
                    raise ExprError(f"no right-hand side for {n.name!r}")
                return ev(rhs_table[n.name], n.name)
            if n.axis == evolution_axis * 2:
                raise ExprError(
                    f"{n.name}_{n.axis} is a second derivative along the evolution axis; "
                    "introduce an auxiliary variable for the first derivative"
                )
            if n.name not in env:
                raise ExprError(f"unbound state variable {n.name!r}")
            return S.diff(env[n.name], n.axis)
        if isinstance(n, Neg):
            return -ev(n.arg, substituting)
        if isinstance(n, Add):
            return ev(n.left, substituting) + ev(n.right, substituting)
        if isinstance(n, Sub):
            return ev(n.left, substituting) - ev(n.right, substituting)
        if isinstance(n, Mul):
            return ev(n.left, substituting) * ev(n.right, substituting)
        if isinstance(n, Div):
            return S.mul(ev(n.left, substituting), S.recip(ev(n.right, substituting), to_text(n.right)))
        if isinstance(n, PowInt):
            return S.powi(ev(n.base, substituting), n.n)
        if isinstance(n, Func):
            raise ExprError(
                f"{n.name}() in a right-hand side: introduce an auxiliary variable for it"
            )
        if isinstance(n, Deriv):
            return S.diff(ev(n.arg, substituting), n.axis)
        raise ExprError(f"cannot evaluate node {n!r}")

    return ev(e, None)
