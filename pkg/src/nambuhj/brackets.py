"""Nambu-Poisson and Nambu-Jacobi brackets on flat coordinate structures.

A flat structure is the local model

    Lambda = rho_lambda * d_1 ^ ... ^ d_n,        Box = rho_box * d_1 ^ ... ^ d_{n-1}

and the order-n Nambu-Jacobi bracket it defines is

    {f_1..f_n} = Lambda(df_1..df_n) + sum_i (-1)^(i-1) f_i Box(df_1..^i..df_n).

Every bracket can be evaluated either to a float or, when ``jet=True``, to a
first-order-exact :class:`~nambuhj.jets.Jet2` so that it can itself be fed
into an outer bracket (used by the fundamental identity).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations
from typing import NamedTuple, Sequence

import numpy as np

from .errors import InvalidInputError
from .exprlang import ScalarField, as_field
from .jets import Jet2, partial, seed_jets, value_of

__all__ = [
    "VnjStructure",
    "Residual",
    "det_generic",
    "cofactor_det",
    "permutation_sign",
    "lambda_bracket",
    "box_bracket",
    "nj_bracket",
    "skew_residual",
    "leibniz_residual",
    "fundamental_identity_residual",
]


@dataclass(frozen=True)
class VnjStructure:
    """Flat Nambu-Jacobi structure of order ``n`` on R^n."""

    n: int
    rho_lambda: ScalarField
    rho_box: ScalarField

    def __post_init__(self):
        if self.n < 3:
            raise InvalidInputError(f"Nambu-Jacobi structures need n >= 3, got {self.n}")
        object.__setattr__(self, "rho_lambda", as_field(self.rho_lambda, self.n))
        object.__setattr__(self, "rho_box", as_field(self.rho_box, self.n))

    @classmethod
    def canonical(cls, n):
        return cls(n, ScalarField.constant(1.0, n), ScalarField.constant(1.0, n))

    @classmethod
    def nambu_poisson(cls, n, rho_lambda=1.0):
        return cls(n, rho_lambda, ScalarField.constant(0.0, n))

    @property
    def box_vanishes(self):
        return self.rho_box.is_constant and self.rho_box.constant_value == 0.0

    @property
    def is_flat_constant(self):
        return self.rho_lambda.is_constant and self.rho_box.is_constant


class Residual(NamedTuple):
    """A residual together with the magnitude of the terms that produced it."""

    value: float
    scale: float

    @property
    def relative(self):
        return abs(self.value) / self.scale

    def __float__(self):
        return float(self.value)


def _scale(terms):
    return max([1.0] + [abs(value_of(t)) for t in terms])


# -- determinants -------------------------------------------------------------

def permutation_sign(perm):
    perm = list(perm)
    if sorted(perm) != list(range(len(perm))):
        raise InvalidInputError(f"not a permutation of 0..{len(perm) - 1}: {perm}")
    inversions = sum(1 for i in range(len(perm)) for j in range(i + 1, len(perm)) if perm[i] > perm[j])
    return -1 if inversions % 2 else 1


def cofactor_det(matrix):
    """Determinant by Laplace expansion along the first row."""
    m = len(matrix)
    if m == 1:
        return matrix[0][0]
    total = 0.0
    for c in range(m):
        minor = [row[:c] + row[c + 1:] for row in matrix[1:]]
        term = matrix[0][c] * cofactor_det(minor)
        total = total + term if c % 2 == 0 else total - term
    return total


def det_generic(matrix):
    """Determinant of a square matrix of floats or jets.

    Gaussian elimination with partial pivoting on the value component.  A
    float matrix with an exactly vanishing pivot is singular and returns 0.
    For jet matrices a (near-)vanishing pivot switches to cofactor expansion,
    which keeps derivatives exact where elimination would divide by zero.
    """
    a = [list(row) for row in matrix]
    m = len(a)
    if m == 0 or any(len(row) != m for row in a):
        raise InvalidInputError("det_generic needs a non-empty square matrix")
    is_jet = any(isinstance(e, Jet2) for row in a for e in row)
    if m == 1:
        return a[0][0]
    if is_jet:
        big = max(abs(value_of(e)) for row in a for e in row)
    sign = 1.0
    for c in range(m):
        p = max(range(c, m), key=lambda r: abs(value_of(a[r][c])))
        pv = abs(value_of(a[p][c]))
        if is_jet and pv <= 1e-8 * big:
            return cofactor_det([list(row) for row in matrix])
        if pv == 0.0:
            return 0.0
        if p != c:
            a[c], a[p] = a[p], a[c]
            sign = -sign
        piv = a[c][c]
        for r in range(c + 1, m):
            f = a[r][c] / piv
            for k in range(c + 1, m):
                a[r][k] = a[r][k] - f * a[c][k]
    det = a[0][0]
    for c in range(1, m):
        det = det * a[c][c]
    return det if sign > 0 else -det


# -- bracket kernels on evaluated jets ----------------------------------------

def _row(f, cols, jet):
    if jet:
        return [partial(f, c) for c in cols]
    return [float(f.grad[c]) for c in cols]


def _val(f, jet):
    return f if jet else f.value


def _lambda_term(rho_l, args, jet):
    n = len(args)
    cols = range(n)
    return _val(rho_l, jet) * det_generic([_row(f, cols, jet) for f in args])


def _box_term(rho_b, args, jet):
    cols = range(len(args))  # derivatives in x1..x_{n-1} only
    return _val(rho_b, jet) * det_generic([_row(f, cols, jet) for f in args])


def _nj(rho_l, rho_b, args, jet, box_zero=False, terms=None):
    total = _lambda_term(rho_l, args, jet)
    if terms is not None:
        terms.append(total)
    if box_zero:
        return total
    for i in range(len(args)):
        term = _val(args[i], jet) * _box_term(rho_b, args[:i] + args[i + 1:], jet)
        if terms is not None:
            terms.append(term)
        total = total + term if i % 2 == 0 else total - term
    return total


def _setup(S, fs, x, count):
    fs = [as_field(f, S.n) for f in fs]
    if len(fs) != count:
        raise InvalidInputError(f"expected {count} functions, got {len(fs)}")
    x = np.asarray(x, dtype=float)
    if x.shape != (S.n,):
        raise InvalidInputError(f"point must have length {S.n}")
    seeds = seed_jets(x)
    return [f(seeds) for f in fs], S.rho_lambda(seeds), S.rho_box(seeds)


def lambda_bracket(S, fs, x, *, jet=False):
    """rho_lambda(x) * det[df_i/dx^j](x) for n functions."""
    args, rl, _ = _setup(S, fs, x, S.n)
    return _lambda_term(rl, args, jet)


def box_bracket(S, fs, x, *, jet=False):
    """rho_box(x) * det of the Jacobian of n-1 functions in x1..x_{n-1}."""
    args, _, rb = _setup(S, fs, x, S.n - 1)
    return _box_term(rb, args, jet)


def nj_bracket(S, fs, x, *, jet=False):
    """The full Nambu-Jacobi bracket of n functions at ``x``."""
    args, rl, rb = _setup(S, fs, x, S.n)
    return _nj(rl, rb, args, jet, S.box_vanishes)


# -- axiom residuals ----------------------------------------------------------

def skew_residual(S, fs, x, perm) -> Residual:
    """{f} - sign(perm) {f_perm}; vanishes for an alternating bracket."""
    args, rl, rb = _setup(S, fs, x, S.n)
    perm = tuple(perm)
    sgn = permutation_sign(perm)
    terms = []
    b0 = _nj(rl, rb, args, False, S.box_vanishes, terms)
    b1 = _nj(rl, rb, [args[p] for p in perm], False, S.box_vanishes, terms)
    return Residual(float(b0 - sgn * b1), _scale(terms + [b0, b1]))


def leibniz_residual(S, f1, g1, rest: Sequence, x) -> Residual:
    """{f1 g1, rest} - f1{g1, rest} - g1{f1, rest} + f1 g1 {1, rest}."""
    args, rl, rb = _setup(S, [f1, g1, *rest], x, S.n + 1)
    fj, gj, others = args[0], args[1], args[2:]
    one = ScalarField.constant(1.0, S.n)(seed_jets(np.asarray(x, dtype=float)))
    bz = S.box_vanishes
    terms = []
    lhs = _nj(rl, rb, [fj * gj] + others, False, bz, terms)
    t1 = fj.value * _nj(rl, rb, [gj] + others, False, bz, terms)
    t2 = gj.value * _nj(rl, rb, [fj] + others, False, bz, terms)
    t3 = fj.value * gj.value * _nj(rl, rb, [one] + others, False, bz, terms)
    return Residual(float(lhs - (t1 + t2 - t3)), _scale(terms + [lhs, t1, t2, t3]))


def fundamental_identity_residual(S, Hs: Sequence, gs: Sequence, x) -> Residual:
    """{H, {g_1..g_n}} - sum_i {g_1, .., {H, g_i}, .., g_n}.

    Inner brackets are evaluated as jets so the outer bracket sees their
    exact first derivatives.
    """
    if len(Hs) != S.n - 1:
        raise InvalidInputError(f"need {S.n - 1} Hamiltonians, got {len(Hs)}")
    args, rl, rb = _setup(S, [*Hs, *gs], x, 2 * S.n - 1)
    hj, gj = args[: S.n - 1], args[S.n - 1:]
    bz = S.box_vanishes
    inner = _nj(rl, rb, gj, True, bz)
    lhs = _nj(rl, rb, hj + [inner], False, bz)
    parts = []
    for i in range(S.n):
        ci = _nj(rl, rb, hj + [gj[i]], True, bz)
        parts.append(_nj(rl, rb, gj[:i] + [ci] + gj[i + 1:], False, bz))
    return Residual(float(lhs - sum(parts)), _scale([lhs, *parts]))


def all_permutations(n):
    return list(permutations(range(n)))
