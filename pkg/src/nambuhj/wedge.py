"""Exterior algebra at a single tangent space.

Forms of degree ``k`` on R^n are stored as coefficient vectors indexed by the
sorted ``k``-subsets of ``{0..n-1}`` in lexicographic order.  The interior
product follows

    i_v (dx^{a_1} ^ ... ^ dx^{a_k}) = sum_m (-1)^(m-1) v^{a_m} dx^{a_1} ^ ..^a_m.. ^ dx^{a_k}

and contraction by ``v_1 ^ ... ^ v_j`` applies ``i_{v_1}`` first.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from math import comb

import numpy as np
from scipy.linalg import null_space

from .errors import InvalidInputError

__all__ = [
    "KForm",
    "Subspace",
    "wedge",
    "interior",
    "contract",
    "annihilator",
    "sharp_lambda",
    "sharp_box",
    "characteristic_matrix",
    "span_rank",
    "is_j_lagrangian",
    "RANK_TOL",
]

RANK_TOL = 1e-10


@lru_cache(maxsize=None)
def _subsets(n, k):
    subs = tuple(combinations(range(n), k))
    return subs, {s: i for i, s in enumerate(subs)}


@dataclass(frozen=True)
class KForm:
    n: int
    k: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if not 0 <= self.k <= self.n:
            raise InvalidInputError(f"form degree {self.k} out of range for n={self.n}")
        if c.shape != (comb(self.n, self.k),):
            raise InvalidInputError(f"a {self.k}-form on R^{self.n} needs {comb(self.n, self.k)} coefficients")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zero(cls, n, k):
        return cls(n, k, np.zeros(comb(n, k)))

    @classmethod
    def basis(cls, n, subset):
        """dx^{s_1} ^ ... ^ dx^{s_k} for a sorted zero-based index tuple."""
        subset = tuple(subset)
        subs, index = _subsets(n, len(subset))
        c = np.zeros(len(subs))
        c[index[subset]] = 1.0
        return cls(n, len(subset), c)

    @classmethod
    def omitting(cls, n, i):
        """The (n-1)-form dx^1 ^ .. ^dx^i^ .. ^ dx^n (zero-based ``i``)."""
        return cls.basis(n, tuple(a for a in range(n) if a != i))

    @classmethod
    def from_covector(cls, vec):
        v = np.asarray(vec, dtype=float)
        return cls(v.size, 1, v)

    @property
    def subsets(self):
        return _subsets(self.n, self.k)[0]

    def coefficient(self, subset):
        return self.coeffs[_subsets(self.n, self.k)[1][tuple(subset)]]

    def __add__(self, other):
        self._compatible(other)
        return KForm(self.n, self.k, self.coeffs + other.coeffs)

    def __sub__(self, other):
        self._compatible(other)
        return KForm(self.n, self.k, self.coeffs - other.coeffs)

    def __mul__(self, c):
        return KForm(self.n, self.k, self.coeffs * float(c))

    __rmul__ = __mul__

    def __neg__(self):
        return KForm(self.n, self.k, -self.coeffs)

    def _compatible(self, other):
        if (self.n, self.k) != (other.n, other.k):
            raise InvalidInputError("form dimension/degree mismatch")

    def __xor__(self, other):
        return wedge(self, other)


def _merge_sign(a, b):
    """Sign of the permutation sorting the concatenation a + b (disjoint)."""
    inv = sum(1 for x in a for y in b if x > y)
    return -1.0 if inv % 2 else 1.0


def wedge(*forms):
    """Exterior product of forms on the same R^n."""
    if not forms:
        raise InvalidInputError("wedge of nothing")
    out = forms[0]
    for f in forms[1:]:
        if f.n != out.n:
            raise InvalidInputError("forms live on different spaces")
        k = out.k + f.k
        if k > out.n:
            return KForm.zero(out.n, out.n)  # degree overflow; caller never reads this
        subs, index = _subsets(out.n, k)
        c = np.zeros(len(subs))
        for a, ca in zip(out.subsets, out.coeffs):
            if ca == 0.0:
                continue
            sa = set(a)
            for b, cb in zip(f.subsets, f.coeffs):
                if cb == 0.0 or sa.intersection(b):
                    continue
                c[index[tuple(sorted(a + b))]] += _merge_sign(a, b) * ca * cb
        out = KForm(out.n, k, c)
    return out


def interior(v, form):
    """i_v form, a (k-1)-form."""
    v = np.asarray(v, dtype=float)
    if v.shape != (form.n,):
        raise InvalidInputError(f"vector length {v.size} does not match n={form.n}")
    if form.k == 0:
        raise InvalidInputError("cannot contract a 0-form")
    subs, index = _subsets(form.n, form.k - 1)
    c = np.zeros(len(subs))
    for s, cs in zip(form.subsets, form.coeffs):
        if cs == 0.0:
            continue
        for m, a in enumerate(s):
            c[index[s[:m] + s[m + 1:]]] += (-1.0) ** m * v[a] * cs
    return KForm(form.n, form.k - 1, c)


def contract(vectors, form):
    """i_{v_1 ^ ... ^ v_j} form, applying i_{v_1} first."""
    vectors = list(vectors)
    if len(vectors) > form.k:
        raise InvalidInputError(f"cannot contract a {form.k}-form with {len(vectors)} vectors")
    out = form
    for v in vectors:
        out = interior(v, out)
    return out


@dataclass(frozen=True)
class Subspace:
    """A linear subspace of R^n given by independent basis vectors (rows)."""

    basis: np.ndarray

    def __post_init__(self):
        b = np.atleast_2d(np.asarray(self.basis, dtype=float))
        if b.size and span_rank(b.T) != b.shape[0]:
            raise InvalidInputError("subspace basis vectors are linearly dependent")
        object.__setattr__(self, "basis", b)

    @property
    def n(self):
        return self.basis.shape[1]

    @property
    def dim(self):
        return self.basis.shape[0]


def span_rank(columns, tol=RANK_TOL):
    """Numerical rank of the column span (singular values below tol*max dropped)."""
    m = np.asarray(columns, dtype=float)
    if m.size == 0:
        return 0
    s = np.linalg.svd(m, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > tol * s[0]))


def _orth(columns, tol=RANK_TOL):
    m = np.asarray(columns, dtype=float)
    if m.size == 0:
        return np.zeros((m.shape[0] if m.ndim == 2 else 0, 0))
    u, s, _ = np.linalg.svd(m, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((m.shape[0], 0))
    return u[:, s > tol * s[0]]


def annihilator(V, j):
    """Basis of Ann^j(V): (n-1)-forms killed by every contraction with j vectors of V."""
    n = V.n
    if not 1 <= j <= n - 1:
        raise InvalidInputError(f"annihilator order must satisfy 1 <= j <= {n - 1}")
    dim = comb(n, n - 1)
    basis_forms = [KForm(n, n - 1, e) for e in np.eye(dim)]
    rows = []
    for tup in combinations(range(V.dim), j):
        vecs = [V.basis[t] for t in tup]
        cols = [contract(vecs, f).coeffs for f in basis_forms]
        rows.append(np.column_stack(cols))
    if not rows:
        return [KForm(n, n - 1, e) for e in np.eye(dim)]
    constraint = np.vstack(rows)
    if not np.any(constraint):
        return [KForm(n, n - 1, e) for e in np.eye(dim)]
    ns = null_space(constraint, rcond=RANK_TOL)
    return [KForm(n, n - 1, ns[:, c]) for c in range(ns.shape[1])]


def _check_point(S, x):
    x = np.asarray(x, dtype=float)
    if x.shape != (S.n,):
        raise InvalidInputError(f"point must have length {S.n}")
    return x


def sharp_lambda(S, form, x):
    """Image of an (n-1)-form: component i is (-1)^(n-i) rho_lambda(x) alpha_{1..^i..n}."""
    n = S.n
    if form.n != n or form.k != n - 1:
        raise InvalidInputError(f"sharp_lambda needs an {n - 1}-form on R^{n}")
    rho = S.rho_lambda.value(_check_point(S, x))
    out = np.zeros(n)
    for i in range(n):
        alpha = form.coefficient(tuple(a for a in range(n) if a != i))
        out[i] = (-1.0) ** (n - 1 - i) * rho * alpha  # zero-based i: (-1)^(n-(i+1))
    return out


def sharp_box(S, form, x):
    """Image of an (n-2)-form under Box = rho_box d_1 ^ .. ^ d_{n-1}.

    Component k < n is (-1)^(n-1-k) rho_box(x) beta_{1..^k..n-1}; the last
    component is always zero.
    """
    n = S.n
    if form.n != n or form.k != n - 2:
        raise InvalidInputError(f"sharp_box needs an {n - 2}-form on R^{n}")
    rho = S.rho_box.value(_check_point(S, x))
    out = np.zeros(n)
    for k in range(n - 1):
        beta = form.coefficient(tuple(a for a in range(n - 1) if a != k))
        out[k] = (-1.0) ** (n - 2 - k) * rho * beta  # zero-based k: (-1)^(n-1-(k+1))
    return out


def characteristic_matrix(S, x):
    """Columns spanning Im sharp_lambda + Im sharp_box at x."""
    n = S.n
    cols = [sharp_lambda(S, KForm(n, n - 1, e), x) for e in np.eye(n)]
    cols += [sharp_box(S, KForm(n, n - 2, e), x) for e in np.eye(comb(n, n - 2))]
    return np.column_stack(cols)


def _same_span(a, b, tol=RANK_TOL):
    ra, rb = span_rank(a, tol), span_rank(b, tol)
    if ra != rb:
        return False
    if ra == 0:
        return True
    return span_rank(np.hstack([a, b]), tol) == ra


def _intersection(a, b, tol=RANK_TOL):
    """Orthonormal basis (columns) of span(a) & span(b)."""
    qa, qb = _orth(a, tol), _orth(b, tol)
    if qa.shape[1] == 0 or qb.shape[1] == 0:
        return np.zeros((qa.shape[0], 0))
    ns = null_space(np.hstack([qa, -qb]), rcond=tol)
    if ns.shape[1] == 0:
        return np.zeros((qa.shape[0], 0))
    return _orth(qa @ ns[: qa.shape[1]], tol)


def is_j_lagrangian(S, V, j, x):
    """Test sharp_lambda Ann^j(V) == C_x & V by mutual containment."""
    if V.n != S.n:
        raise InvalidInputError("subspace and structure dimensions differ")
    ann = annihilator(V, j)
    n = S.n
    if ann:
        lhs = np.column_stack([sharp_lambda(S, a, x) for a in ann])
    else:
        lhs = np.zeros((n, 0))
    rhs = _intersection(characteristic_matrix(S, x), V.basis.T)
    return _same_span(lhs, rhs)
