"""Closed-form scalar fields on the unit square.

A tiny expression language (numbers, ``x``, ``y``, ``pi``, ``+ - * /``,
integer powers, ``sin``, ``cos``, ``exp``) with a recursive-descent parser, a
symbolic differentiator and a numpy-vectorised evaluator.

Grammar::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := '-' factor | power
    power  := atom ('^' integer)?
    atom   := number | 'x' | 'y' | 'pi' | func '(' expr ')' | '(' expr ')'
    func   := 'sin' | 'cos' | 'exp'

``^`` binds tighter than unary minus, so ``-x^2`` is ``-(x^2)``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field as dc_field

import numpy as np


class ParseError(ValueError):
    """Syntax error at byte ``offset``; ``expected`` lists acceptable tokens."""

    def __init__(self, text, offset, expected):
        self.text = text
        self.offset = offset
        self.expected = tuple(sorted(expected))
        found = text[offset:offset + 10] or "end of input"
        super().__init__(
            f"syntax error at offset {offset} (near {found!r}): "
            f"expected one of {', '.join(self.expected)}")


class EvaluationError(ArithmeticError):
    pass


# Precedence levels used by the printer.
_P_ADD, _P_MUL, _P_NEG, _P_POW, _P_ATOM = 1, 2, 3, 4, 5


class Expression:
    """Base class for expression nodes. Nodes are immutable and hashable."""

    def evaluate(self, x, y):
        return self._eval(x, y)

    def diff(self, var: str) -> "Expression":
        return self._diff(var)

    def __str__(self):
        return self._text(0)

    def size(self) -> int:
        return 1 + sum(ch.size() for ch in self.children())

    def children(self):
        return ()


@dataclass(frozen=True)
class Const(Expression):
    value: float
    name: str | None = dc_field(default=None, compare=False)

    def _eval(self, x, y):
        return self.value

    def _diff(self, var):
        return ZERO

    def _text(self, prec):
        if self.name:
            return self.name
        s = repr(float(self.value))
        if s.endswith(".0"):
            s = s[:-2]
        if self.value < 0:
            return f"({s})"
        return s


@dataclass(frozen=True)
class Var(Expression):
    name: str

    def _eval(self, x, y):
        return x if self.name == "x" else y

    def _diff(self, var):
        return ONE if var == self.name else ZERO

    def _text(self, prec):
        return self.name


@dataclass(frozen=True)
class Neg(Expression):
    arg: Expression

    def children(self):
        return (self.arg,)

    def _eval(self, x, y):
        return -self.arg._eval(x, y)

    def _diff(self, var):
        return neg(self.arg._diff(var))

    def _text(self, prec):
        s = "-" + self.arg._text(_P_NEG)
        return f"({s})" if prec > _P_NEG else s


@dataclass(frozen=True)
class Binary(Expression):
    left: Expression
    right: Expression

    def children(self):
        return (self.left, self.right)


class Add(Binary):
    def _eval(self, x, y):
        return self.left._eval(x, y) + self.right._eval(x, y)

    def _diff(self, var):
        return add(self.left._diff(var), self.right._diff(var))

    def _text(self, prec):
        s = f"{self.left._text(_P_ADD)} + {self.right._text(_P_ADD + 1)}"
        return f"({s})" if prec > _P_ADD else s


class Sub(Binary):
    def _eval(self, x, y):
        return self.left._eval(x, y) - self.right._eval(x, y)

    def _diff(self, var):
        return sub(self.left._diff(var), self.right._diff(var))

    def _text(self, prec):
        s = f"{self.left._text(_P_ADD)} - {self.right._text(_P_ADD + 1)}"
        return f"({s})" if prec > _P_ADD else s


class Mul(Binary):
    def _eval(self, x, y):
        return self.left._eval(x, y) * self.right._eval(x, y)

    def _diff(self, var):
        return add(mul(self.left._diff(var), self.right),
                   mul(self.left, self.right._diff(var)))

    def _text(self, prec):
        s = f"{self.left._text(_P_MUL)}*{self.right._text(_P_MUL + 1)}"
        return f"({s})" if prec > _P_MUL else s


class Div(Binary):
    def _eval(self, x, y):
        den = self.right._eval(x, y)
        if np.any(np.asarray(den) == 0):
            raise EvaluationError(f"division by zero in {self}")
        return self.left._eval(x, y) / den

    def _diff(self, var):
        num = sub(mul(self.left._diff(var), self.right),
                  mul(self.left, self.right._diff(var)))
        return div(num, power(self.right, 2))

    def _text(self, prec):
        s = f"{self.left._text(_P_MUL)}/{self.right._text(_P_MUL + 1)}"
        return f"({s})" if prec > _P_MUL else s


@dataclass(frozen=True)
class Pow(Expression):
    base: Expression
    exponent: int

    def children(self):
        return (self.base,)

    def _eval(self, x, y):
        b = self.base._eval(x, y)
        if self.exponent < 0:
            if np.any(np.asarray(b) == 0):
                raise EvaluationError(f"zero raised to a negative power in {self}")
            return 1.0 / b ** (-self.exponent)
        return b ** self.exponent

    def _diff(self, var):
        k = self.exponent
        return mul(Const(float(k)), mul(power(self.base, k - 1), self.base._diff(var)))

    def _text(self, prec):
        if self.exponent < 0:
            return f"(1/{Pow(self.base, -self.exponent)._text(_P_MUL + 1)})"
        s = f"{self.base._text(_P_ATOM)}^{self.exponent}"
        return f"({s})" if prec > _P_POW else s


_FUNCS = {"sin": np.sin, "cos": np.cos, "exp": np.exp}


@dataclass(frozen=True)
class Func(Expression):
    name: str
    arg: Expression

    def children(self):
        return (self.arg,)

    def _eval(self, x, y):
        return _FUNCS[self.name](self.arg._eval(x, y))

    def _diff(self, var):
        inner = self.arg._diff(var)
        if self.name == "sin":
            outer = func("cos", self.arg)
        elif self.name == "cos":
            outer = neg(func("sin", self.arg))
        else:
            outer = self
        return mul(outer, inner)

    def _text(self, prec):
        return f"{self.name}({self.arg._text(0)})"


ZERO = Const(0.0)
ONE = Const(1.0)
PI = Const(math.pi, "pi")
X = Var("x")
Y = Var("y")


def _is(e, v):
    return isinstance(e, Const) and e.value == v


# Smart constructors: fold constants and drop neutral elements.

def neg(e):
    if isinstance(e, Const):
        return Const(-e.value)
    if isinstance(e, Neg):
        return e.arg
    return Neg(e)


def add(l, r):
    if isinstance(l, Const) and isinstance(r, Const):
        return Const(l.value + r.value)
    if _is(l, 0):
        return r
    if _is(r, 0):
        return l
    if isinstance(r, Neg):
        return sub(l, r.arg)
    return Add(l, r)


def sub(l, r):
    if isinstance(l, Const) and isinstance(r, Const):
        return Const(l.value - r.value)
    if _is(r, 0):
        return l
    if _is(l, 0):
        return neg(r)
    if isinstance(r, Neg):
        return add(l, r.arg)
    return Sub(l, r)


def mul(l, r):
    if isinstance(l, Const) and isinstance(r, Const):
        return Const(l.value * r.value)
    if _is(l, 0) or _is(r, 0):
        return ZERO
    if _is(l, 1):
        return r
    if _is(r, 1):
        return l
    if _is(l, -1):
        return neg(r)
    if _is(r, -1):
        return neg(l)
    if isinstance(r, Const):
        l, r = r, l
    # c1*(c2*e) -> (c1*c2)*e keeps constant factors from piling up
    if isinstance(l, Const) and isinstance(r, Mul) and isinstance(r.left, Const):
        return mul(Const(l.value * r.left.value), r.right)
    if isinstance(l, Const) and isinstance(r, Neg):
        return mul(Const(-l.value), r.arg)
    return Mul(l, r)


def div(l, r):
    if _is(r, 0):
        raise EvaluationError("division by the constant zero")
    if isinstance(l, Const) and isinstance(r, Const):
        return Const(l.value / r.value)
    if _is(l, 0):
        return ZERO
    if _is(r, 1):
        return l
    return Div(l, r)


def power(base, k: int):
    if k == 0:
        return ONE
    if k == 1:
        return base
    if isinstance(base, Const):
        if base.value == 0 and k < 0:
            raise EvaluationError("zero raised to a negative power")
        return Const(base.value ** k)
    if isinstance(base, Pow):
        return power(base.base, base.exponent * k)
    return Pow(base, k)


def func(name, arg):
    if isinstance(arg, Const):
        return Const(float(_FUNCS[name](arg.value)))
    return Func(name, arg)


# --------------------------------------------------------------------------
# Parser

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_]\w*)
  | (?P<op>[-+*/^()])
""", re.VERBOSE)


def _tokenize(text):
    pos, out = 0, []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(text, pos, {"number", "x", "y", "pi", "sin", "cos", "exp",
                                         "+", "-", "*", "/", "^", "(", ")"})
        kind = m.lastgroup
        if kind != "ws":
            out.append((kind, m.group(), pos))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _Parser:
    _ATOM_START = {"number", "x", "y", "pi", "sin", "cos", "exp", "(", "-"}

    def __init__(self, text):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def tok(self):
        return self.toks[self.i]

    def fail(self, expected):
        raise ParseError(self.text, self.tok[2], expected)

    def accept(self, value):
        if self.tok[1] == value and self.tok[0] in ("op", "name"):
            self.i += 1
            return True
        return False

    def expect(self, value):
        if not self.accept(value):
            self.fail({value})

    def parse(self):
        e = self.expr()
        if self.tok[0] != "end":
            self.fail({"+", "-", "*", "/", "^", "end of input"})
        return e

    def expr(self):
        e = self.term()
        while True:
            if self.accept("+"):
                e = add(e, self.term())
            elif self.accept("-"):
                e = sub(e, self.term())
            else:
                return e

    def term(self):
        e = self.factor()
        while True:
            if self.accept("*"):
                e = mul(e, self.factor())
            elif self.accept("/"):
                off = self.tok[2]
                rhs = self.factor()
                if _is(rhs, 0):
                    raise ParseError(self.text, off, {"nonzero divisor"})
                e = div(e, rhs)
            else:
                return e

    def factor(self):
        if self.accept("-"):
            return neg(self.factor())
        return self.power()

    def power(self):
        base = self.atom()
        if self.accept("^"):
            kind, value, _ = self.tok
            if kind != "number" or not value.isdigit():
                self.fail({"integer"})
            self.i += 1
            return power(base, int(value))
        return base

    def atom(self):
        kind, value, _ = self.tok
        if kind == "number":
            self.i += 1
            return Const(float(value))
        if kind == "name":
            if value in ("x", "y"):
                self.i += 1
                return Var(value)
            if value == "pi":
                self.i += 1
                return PI
            if value in _FUNCS:
                self.i += 1
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return func(value, arg)
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        self.fail(self._ATOM_START)


def parse(text: str) -> Expression:
    """Parse ``text`` into an expression tree (constants folded)."""
    return _Parser(text).parse()


def differentiate(e: Expression, m: int, n: int) -> Expression:
    """d^{m+n} e / dx^m dy^n, x-derivatives taken first."""
    if m < 0 or n < 0:
        raise ValueError("derivative orders must be nonnegative")
    for _ in range(m):
        e = e.diff("x")
    for _ in range(n):
        e = e.diff("y")
    return e


def evaluate(e: Expression, x, y):
    """Evaluate ``e`` in float64; ``x`` and ``y`` may be numpy arrays."""
    with np.errstate(over="raise", invalid="raise"):
        try:
            v = e.evaluate(np.asarray(x, dtype=float) if np.ndim(x) else float(x),
                           np.asarray(y, dtype=float) if np.ndim(y) else float(y))
        except FloatingPointError as err:
            raise EvaluationError(f"{err} while evaluating {e}") from err
    if np.ndim(v) == 0 and (np.ndim(x) or np.ndim(y)):
        v = np.broadcast_to(np.float64(v), np.broadcast(x, y).shape).copy()
    return v


class DifferentiableField2D:
    """A scalar field with cached symbolic partial derivatives."""

    def __init__(self, base: Expression | str):
        if isinstance(base, str):
            base = parse(base)
        self.base = base
        self._cache = {(0, 0): base}

    def __repr__(self):
        return f"DifferentiableField2D({str(self.base)!r})"

    def __str__(self):
        return str(self.base)

    def partial(self, m: int, n: int) -> Expression:
        key = (m, n)
        if key not in self._cache:
            if m < 0 or n < 0:
                raise ValueError("derivative orders must be nonnegative")
            if n > 0:
                self._cache[key] = self.partial(m, n - 1).diff("y")
            else:
                self._cache[key] = self.partial(m - 1, 0).diff("x")
        return self._cache[key]

    def prepare(self, max_order: int):
        """Populate the cache for every m + n <= max_order."""
        for s in range(max_order + 1):
            for m in range(s + 1):
                self.partial(m, s - m)
        return self

    def __call__(self, x, y, m: int = 0, n: int = 0):
        return evaluate(self.partial(m, n), x, y)

    def scaled(self, factor: float) -> "DifferentiableField2D":
        return DifferentiableField2D(mul(Const(float(factor)), self.base))


def as_field(value) -> DifferentiableField2D:
    if isinstance(value, DifferentiableField2D):
        return value
    return DifferentiableField2D(value)


def manufactured_source(u, eps: float, a: float, b: float) -> DifferentiableField2D:
    """Source ``f = -eps (u_xx + u_yy) + a u_x + b u_y`` for a chosen solution ``u``."""
    if not (eps > 0 and a > 0 and b > 0):
        raise ValueError(f"eps, a, b must be positive, got {eps}, {a}, {b}")
    u = as_field(u)
    lap = add(u.partial(2, 0), u.partial(0, 2))
    f = add(mul(Const(-float(eps)), lap),
            add(mul(Const(float(a)), u.partial(1, 0)), mul(Const(float(b)), u.partial(0, 1))))
    return DifferentiableField2D(f)
