"""Second-order forward-mode automatic differentiation.

A :class:`Jet2` carries a value together with its exact gradient and Hessian
with respect to ``n`` seed variables.  Arithmetic follows the truncated
second-order Taylor rules, so composing jets yields exact first and second
derivatives up to rounding.

The scalar helpers (:func:`sin`, :func:`exp`, :func:`ipow`, ...) accept
either plain floats or jets, which lets the same expression code run over
both.  Plain-float evaluation uses exactly the operation order of the jet
value path, so reading ``.value`` off a jet reproduces the float result
bit-for-bit.
"""

from __future__ import annotations

import math
from numbers import Real

import numpy as np

from .errors import DomainError, InvalidInputError

__all__ = [
    "Jet2",
    "seed_jets",
    "jet_apply",
    "lift",
    "partial",
    "value_of",
    "sin",
    "cos",
    "exp",
    "log",
    "sqrt",
    "ipow",
    "DIV_EPS",
]

# Denominators smaller than this raise instead of producing huge/inf values.
DIV_EPS = 1e-300


def _finite_float(v, op):
    if not math.isfinite(v):
        raise DomainError(op, f"{op} produced a non-finite value")
    return v


class Jet2:
    """A scalar in ``n`` variables carried with its gradient and Hessian.

    ``order`` records how many derivative levels are exact: 2 for jets built
    from seeds by arithmetic, 1 for jets produced by :func:`partial` (whose
    Hessian would need third derivatives and is therefore left at zero).
    """

    __slots__ = ("value", "grad", "hess", "order")
    __array_priority__ = 1000  # keep numpy scalars from hijacking the operators

    def __init__(self, value, grad, hess, order=2, _check=True):
        self.value = float(value)
        self.grad = grad
        self.hess = hess
        self.order = order
        if _check and not (
            math.isfinite(self.value)
            and np.isfinite(grad).all()
            and np.isfinite(hess).all()
        ):
            raise DomainError("jet", "non-finite jet component")

    @property
    def n(self):
        return self.grad.shape[0]

    def __repr__(self):
        return f"Jet2(value={self.value!r}, grad={self.grad.tolist()!r}, hess={self.hess.tolist()!r})"

    # -- helpers ---------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, Jet2):
            if other.n != self.n:
                raise InvalidInputError(f"jet dimension mismatch: {self.n} vs {other.n}")
            return other
        if isinstance(other, Real):
            return lift(float(other), self.n)
        return NotImplemented

    def _unary(self, op, f0, f1, f2):
        """Chain rule for a scalar function with value f0 and derivatives f1, f2."""
        g = self.grad
        return _make(
            op,
            f0,
            f1 * g,
            f1 * self.hess + f2 * np.outer(g, g),
            self.order,
        )

    # -- arithmetic ------------------------------------------------------
    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return _make("add", self.value + o.value, self.grad + o.grad,
                     self.hess + o.hess, min(self.order, o.order))

    def __radd__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return o.__add__(self)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return _make("sub", self.value - o.value, self.grad - o.grad,
                     self.hess - o.hess, min(self.order, o.order))

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return o.__sub__(self)

    def __neg__(self):
        return Jet2(-self.value, -self.grad, -self.hess, self.order, _check=False)

    def __pos__(self):
        return self

    def __mul__(self, other):
        if isinstance(other, Real):
            c = float(other)
            return _make("mul", self.value * c, self.grad * c, self.hess * c, self.order)
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        a, b = self, o
        cross = np.outer(a.grad, b.grad)
        return _make(
            "mul",
            a.value * b.value,
            a.value * b.grad + b.value * a.grad,
            a.value * b.hess + b.value * a.hess + (cross + cross.T),
            min(a.order, b.order),
        )

    def __rmul__(self, other):
        if isinstance(other, Real):
            c = float(other)
            return _make("mul", c * self.value, c * self.grad, c * self.hess, self.order)
        return NotImplemented

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return _div(self, o)

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return _div(o, self)

    def __pow__(self, k):
        if isinstance(k, (int, np.integer)) and not isinstance(k, bool):
            return ipow(self, int(k))
        if isinstance(k, Real) and float(k).is_integer():
            return ipow(self, int(k))
        raise InvalidInputError("jets only support integer powers; use exp(b*log(a))")

    # -- elementary functions -------------------------------------------
    def sin(self):
        v = self.value
        s, c = math.sin(v), math.cos(v)
        return self._unary("sin", s, c, -s)

    def cos(self):
        v = self.value
        s, c = math.sin(v), math.cos(v)
        return self._unary("cos", c, -s, -c)

    def exp(self):
        try:
            e = math.exp(self.value)
        except OverflowError:
            raise DomainError("exp", "exp overflow") from None
        return self._unary("exp", e, e, e)

    def log(self):
        v = self.value
        if not v > 0.0:
            raise DomainError("log", f"log requires a positive argument, got {v!r}")
        return self._unary("log", math.log(v), 1.0 / v, -1.0 / (v * v))

    def sqrt(self):
        v = self.value
        if not v > 0.0:
            raise DomainError("sqrt", f"sqrt of a jet requires a positive argument, got {v!r}")
        r = math.sqrt(v)
        return self._unary("sqrt", r, 0.5 / r, -0.25 / (r * v))


def _make(op, value, grad, hess, order):
    if not (math.isfinite(value) and np.isfinite(grad).all() and np.isfinite(hess).all()):
        raise DomainError(op, f"{op} produced a non-finite value")
    return Jet2(value, grad, hess, order, _check=False)


def _div(a, b):
    bv = b.value
    if abs(bv) < DIV_EPS:
        raise DomainError("div", "division by zero")
    q = a.value / bv
    gq = (a.grad - q * b.grad) / bv
    cross = np.outer(gq, b.grad)
    hq = (a.hess - q * b.hess - (cross + cross.T)) / bv
    return _make("div", q, gq, hq, min(a.order, b.order))


def lift(value, n):
    """A constant as a jet in ``n`` variables."""
    return Jet2(value, np.zeros(n), np.zeros((n, n)), 2, _check=False)


def seed_jets(point):
    """Independent-variable jets at ``point``: value x_i, gradient e_i, zero Hessian."""
    x = np.asarray(point, dtype=float)
    if x.ndim != 1 or x.size < 1:
        raise InvalidInputError("seed point must be a non-empty vector")
    if not np.isfinite(x).all():
        raise InvalidInputError(f"seed point must be finite, got {x.tolist()}")
    n = x.size
    eye = np.eye(n)
    return [Jet2(x[i], eye[i].copy(), np.zeros((n, n)), 2, _check=False) for i in range(n)]


def partial(jet, j):
    """The jet of d(jet)/dx_j, exact to first order.

    Requires a second-order jet; the result has ``order == 1``.
    """
    if jet.order < 2:
        raise InvalidInputError("partial() needs a second-order jet")
    n = jet.n
    return Jet2(jet.grad[j], jet.hess[j].copy(), np.zeros((n, n)), 1, _check=False)


def value_of(x):
    return x.value if isinstance(x, Jet2) else float(x)


# -- scalar helpers working on floats and jets ---------------------------

def sin(x):
    if isinstance(x, Jet2):
        return x.sin()
    return _finite_float(math.sin(x), "sin")


def cos(x):
    if isinstance(x, Jet2):
        return x.cos()
    return _finite_float(math.cos(x), "cos")


def exp(x):
    if isinstance(x, Jet2):
        return x.exp()
    try:
        return math.exp(x)
    except OverflowError:
        raise DomainError("exp", "exp overflow") from None


def log(x):
    if isinstance(x, Jet2):
        return x.log()
    if not x > 0.0:
        raise DomainError("log", f"log requires a positive argument, got {x!r}")
    return math.log(x)


def sqrt(x):
    if isinstance(x, Jet2):
        return x.sqrt()
    if not x >= 0.0:
        raise DomainError("sqrt", f"sqrt requires a non-negative argument, got {x!r}")
    return math.sqrt(x)


def ipow(x, k):
    """``x**k`` for integer ``k`` (negative exponents need a nonzero base)."""
    k = int(k)
    if isinstance(x, Jet2):
        v = x.value
        if k < 0 and abs(v) < DIV_EPS:
            raise DomainError("pow", "negative power of zero")
        if k == 0:
            return lift(1.0, x.n)
        try:
            f0 = v ** k
            f1 = k * v ** (k - 1)
            f2 = k * (k - 1) * v ** (k - 2) if k != 1 else 0.0
        except (OverflowError, ZeroDivisionError):
            raise DomainError("pow", "power overflow") from None
        return x._unary("pow", f0, f1, f2)
    x = float(x)
    if k < 0 and abs(x) < DIV_EPS:
        raise DomainError("pow", "negative power of zero")
    try:
        return _finite_float(x ** k, "pow")
    except OverflowError:
        raise DomainError("pow", "power overflow") from None


def _float_div(a, b):
    if abs(b) < DIV_EPS:
        raise DomainError("div", "division by zero")
    return _finite_float(a / b, "div")


def _binary(op, a, b):
    if op == "div" and not isinstance(a, Jet2) and not isinstance(b, Jet2):
        return _float_div(float(a), float(b))
    if op == "add":
        r = a + b
    elif op == "sub":
        r = a - b
    elif op == "mul":
        r = a * b
    elif op == "div":
        r = a / b
    else:  # pragma: no cover - guarded by jet_apply
        raise InvalidInputError(op)
    if not isinstance(r, Jet2):
        _finite_float(r, op)
    return r


_UNARY = {"sin": sin, "cos": cos, "exp": exp, "log": log, "sqrt": sqrt,
          "neg": lambda a: -a}
_BINARY = ("add", "sub", "mul", "div")


def jet_apply(op, *args):
    """Apply a named operation to one or two jets (or floats).

    ``pow-int`` takes the base and an integer exponent.
    """
    if op in _UNARY:
        if len(args) != 1:
            raise InvalidInputError(f"{op} takes one argument")
        return _UNARY[op](args[0])
    if op in _BINARY:
        if len(args) != 2:
            raise InvalidInputError(f"{op} takes two arguments")
        return _binary(op, *args)
    if op in ("pow-int", "pow"):
        if len(args) != 2:
            raise InvalidInputError("pow-int takes a base and an integer exponent")
        return ipow(args[0], args[1])
    raise InvalidInputError(f"unknown jet operation {op!r}")
