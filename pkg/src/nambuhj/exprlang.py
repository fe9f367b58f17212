"""A small expression language for scalar fields.

Grammar, loosest binding first::

    expr    := term (("+" | "-") term)*
    term    := power (("*" | "/") power)*
    power   := unary ("^" power)?          # right associative
    unary   := "-" unary | "+" unary | primary
    primary := NUMBER | NAME | NAME "(" expr ("," expr)* ")" | "(" expr ")"

Unary minus binds tighter than ``^``, so ``-x1^2`` is ``(-x1)^2``.
Coordinates are ``x1 .. xn``; any other bare name must be a declared
parameter.  Functions: ``sin cos exp log sqrt`` (one argument) and
``pow`` (two).  Powers whose exponent is a constant integer are evaluated
exactly; any other power is routed through ``exp(b*log(a))``.

Expressions evaluate identically over floats and :class:`~nambuhj.jets.Jet2`.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence, Union

from . import jets
from .errors import (
    ArityError,
    DomainError,
    InvalidInputError,
    ParseError,
    UnboundParameterError,
    UnknownIdentifierError,
)
from .jets import Jet2

__all__ = [
    "Expr",
    "Num",
    "Var",
    "Param",
    "Neg",
    "BinOp",
    "IntPow",
    "Pow",
    "Call",
    "parse",
    "evaluate",
    "pretty",
    "is_constant",
    "ScalarField",
]


# -- AST ----------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    index: int  # zero-based; printed as x{index+1}


@dataclass(frozen=True)
class Param:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * /
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class IntPow:
    base: "Expr"
    exponent: int


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: "Expr"


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple


Expr = Union[Num, Var, Param, Neg, BinOp, IntPow, Pow, Call]

UNARY_FUNCS = ("sin", "cos", "exp", "log", "sqrt")
FUNCS = {**{f: 1 for f in UNARY_FUNCS}, "pow": 2}


# -- tokenizer ----------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^(),])"
    r")"
)


def _tokenize(text):
    tokens = []
    pos = 0
    end = len(text)
    while pos < end:
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", pos, text)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("eof", "", len(text)))
    return tokens


_COORD = re.compile(r"x([1-9][0-9]*)\Z")


class _Parser:
    def __init__(self, text, n, params):
        self.text = text
        self.n = n
        self.params = frozenset(params)
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, val, off = self.peek()
        if val != value or kind != "op":
            found = "end of input" if kind == "eof" else repr(val)
            raise ParseError(f"expected {value!r}, found {found}", off, self.text)
        return self.advance()

    def parse(self):
        node = self.expr()
        kind, val, off = self.peek()
        if kind != "eof":
            raise ParseError(f"unexpected token {val!r}", off, self.text)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.advance()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.power()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.advance()[1]
            node = BinOp(op, node, self.power())
        return node

    def power(self):
        base = self.unary()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.advance()
            return make_pow(base, self.power())
        return base

    def unary(self):
        kind, val, _ = self.peek()
        if kind == "op" and val == "-":
            self.advance()
            return Neg(self.unary())
        if kind == "op" and val == "+":
            self.advance()
            return self.unary()
        return self.primary()

    def primary(self):
        kind, val, off = self.advance()
        if kind == "num":
            return Num(float(val))
        if kind == "name":
            if self.peek()[0] == "op" and self.peek()[1] == "(":
                return self.call(val, off)
            return self.name(val, off)
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "eof" else repr(val)
        raise ParseError(f"unexpected {found}", off, self.text)

    def name(self, val, off):
        m = _COORD.match(val)
        if m and val not in self.params:
            idx = int(m.group(1))
            if idx > self.n:
                raise UnknownIdentifierError(val, off, self.text)
            return Var(idx - 1)
        if val in self.params:
            return Param(val)
        raise UnknownIdentifierError(val, off, self.text)

    def call(self, func, off):
        if func not in FUNCS:
            raise UnknownIdentifierError(func, off, self.text)
        self.expect("(")
        args = [self.expr()]
        while self.peek()[0] == "op" and self.peek()[1] == ",":
            self.advance()
            args.append(self.expr())
        self.expect(")")
        if len(args) != FUNCS[func]:
            raise ArityError(
                f"{func} takes {FUNCS[func]} argument(s), got {len(args)}", off, self.text
            )
        if func == "pow":
            return make_pow(args[0], args[1])
        return Call(func, tuple(args))


def is_constant(expr):
    """True when the expression references no coordinates or parameters."""
    if isinstance(expr, Num):
        return True
    if isinstance(expr, (Var, Param)):
        return False
    if isinstance(expr, Neg):
        return is_constant(expr.operand)
    if isinstance(expr, BinOp):
        return is_constant(expr.left) and is_constant(expr.right)
    if isinstance(expr, IntPow):
        return is_constant(expr.base)
    if isinstance(expr, Pow):
        return is_constant(expr.base) and is_constant(expr.exponent)
    if isinstance(expr, Call):
        return all(is_constant(a) for a in expr.args)
    raise TypeError(expr)


def make_pow(base, exponent):
    if is_constant(exponent):
        k = evaluate(exponent, ())
        if float(k).is_integer() and abs(k) <= 2**31:
            return IntPow(base, int(k))
    return Pow(base, exponent)


def parse(text, n, params=()):
    """Parse ``text`` into an AST over coordinates ``x1..xn`` and ``params``."""
    if not isinstance(text, str) or not text.strip():
        raise ParseError("empty expression", 0, text)
    if n < 0:
        raise InvalidInputError("coordinate count must be non-negative")
    return _Parser(text, n, params).parse()


# -- evaluation ---------------------------------------------------------------

def evaluate(expr, point, env=None):
    """Evaluate over a sequence of floats or jets.  ``env`` binds parameters."""
    env = env or {}

    def ev(node):
        if isinstance(node, Num):
            return node.value
        if isinstance(node, Var):
            return point[node.index]
        if isinstance(node, Param):
            try:
                return env[node.name]
            except KeyError:
                raise UnboundParameterError(node.name) from None
        if isinstance(node, Neg):
            return jets.jet_apply("neg", ev(node.operand))
        if isinstance(node, BinOp):
            a = ev(node.left)
            b = ev(node.right)
            return jets.jet_apply(_BINOPS[node.op], a, b)
        if isinstance(node, IntPow):
            return jets.ipow(ev(node.base), node.exponent)
        if isinstance(node, Pow):
            a = ev(node.base)
            b = ev(node.exponent)
            return jets.exp(jets.jet_apply("mul", b, jets.log(a)))
        if isinstance(node, Call):
            return jets.jet_apply(node.func, ev(node.args[0]))
        raise TypeError(node)

    return ev(expr)


_BINOPS = {"+": "add", "-": "sub", "*": "mul", "/": "div"}


# -- pretty printing ----------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}
_POW_PREC = 3
_UNARY_PREC = 4
_ATOM_PREC = 5


def _prec(node):
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, (IntPow, Pow)):
        return _POW_PREC
    if isinstance(node, Neg):
        return _UNARY_PREC
    return _ATOM_PREC


def _fmt_num(v):
    if v.is_integer() and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def pretty(expr):
    """Render with the minimum parentheses the grammar needs."""

    def wrap(node, min_prec):
        s = pp(node)
        return f"({s})" if _prec(node) < min_prec else s

    def pp(node):
        if isinstance(node, Num):
            return _fmt_num(node.value)
        if isinstance(node, Var):
            return f"x{node.index + 1}"
        if isinstance(node, Param):
            return node.name
        if isinstance(node, Neg):
            return "-" + wrap(node.operand, _UNARY_PREC)
        if isinstance(node, BinOp):
            p = _PREC[node.op]
            return f"{wrap(node.left, p)} {node.op} {wrap(node.right, p + 1)}"
        if isinstance(node, IntPow):
            return f"{wrap(node.base, _UNARY_PREC)}^{node.exponent}"
        if isinstance(node, Pow):
            return f"{wrap(node.base, _UNARY_PREC)}^{wrap(node.exponent, _POW_PREC)}"
        if isinstance(node, Call):
            return f"{node.func}({', '.join(pp(a) for a in node.args)})"
        raise TypeError(node)

    return pp(expr)


# -- scalar fields ------------------------------------------------------------

class ScalarField:
    """An evaluable real function of ``n`` coordinates.

    Wraps either a parsed expression (with frozen parameter values) or a
    Python callable taking a sequence of floats or jets.  Calling a field on
    jets always returns a :class:`Jet2`; constants are lifted.
    """

    def __init__(self, func: Callable[[Sequence], object], n=None, *, name=None,
                 expr=None, env=None, constant=None):
        self._func = func
        self.n = n
        self.name = name
        self.expr = expr
        self.env = dict(env or {})
        self._constant = constant

    @classmethod
    def parse(cls, text, n, params: Mapping[str, float] | None = None):
        params = dict(params or {})
        expr = parse(text, n, params.keys())
        env = {k: float(v) for k, v in params.items()}
        const = evaluate(expr, ()) if is_constant(expr) else None
        return cls(lambda xs: evaluate(expr, xs, env), n, name=pretty(expr),
                   expr=expr, env=env, constant=const)

    @classmethod
    def constant(cls, c, n=None):
        c = float(c)
        return cls(lambda xs: c, n, name=_fmt_num(c), expr=Num(c), constant=c)

    @classmethod
    def coordinate(cls, i, n):
        """The coordinate function x_{i+1} (``i`` is zero-based)."""
        if not 0 <= i < n:
            raise InvalidInputError(f"coordinate index {i} out of range for n={n}")
        return cls(lambda xs: xs[i], n, name=f"x{i + 1}", expr=Var(i))

    @classmethod
    def from_callable(cls, fn, n=None, name=None):
        return cls(fn, n, name=name or getattr(fn, "__name__", "field"))

    @property
    def is_constant(self):
        return self._constant is not None

    @property
    def constant_value(self):
        return self._constant

    def _check_len(self, xs):
        if self.n is not None and len(xs) != self.n:
            raise InvalidInputError(f"field {self.name!r} expects {self.n} coordinates, got {len(xs)}")

    def __call__(self, xs):
        self._check_len(xs)
        r = self._func(xs)
        if xs and isinstance(xs[0], Jet2) and not isinstance(r, Jet2):
            r = jets.lift(float(r), xs[0].n)
        elif not isinstance(r, Jet2):
            r = float(r)
            if not math.isfinite(r):
                raise DomainError("eval", f"field {self.name!r} is not finite")
        return r

    def value(self, x):
        return float(self([float(v) for v in x]))

    def jet(self, x):
        """The :class:`Jet2` of the field at ``x``."""
        return self(jets.seed_jets(x))

    def __repr__(self):
        return f"ScalarField({self.name!r}, n={self.n})"


def as_field(f, n, params=None):
    """Coerce expression text or a number to a ScalarField."""
    if isinstance(f, ScalarField):
        return f
    if isinstance(f, str):
        return ScalarField.parse(f, n, params)
    if isinstance(f, (int, float)):
        return ScalarField.constant(f, n)
    if callable(f):
        return ScalarField.from_callable(f, n)
    raise InvalidInputError(f"cannot interpret {f!r} as a scalar field")
