"""Multi-Hamiltonian vector fields on flat Nambu-Jacobi structures.

The field of ``n-1`` Hamiltonians is computed two independent ways:

* :func:`ham_vf` transcribes the coordinate formula term by term (signed
  Jacobian minors of the Hamiltonians);
* :func:`ham_vf_composed` builds ``sharp_lambda(dH_1 ^ .. ^ dH_{n-1})`` plus
  ``sum_i (-1)^(i-1) H_i sharp_box(dH_1 ^ ..^i.. ^ dH_{n-1})`` with the
  exterior-algebra routines of :mod:`nambuhj.wedge`.

:func:`vf_from_brackets` gives a third route through the bracket itself.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .brackets import Residual, VnjStructure, _scale, box_bracket, det_generic, nj_bracket
from .errors import InvalidInputError
from .exprlang import ScalarField, as_field
from .jets import partial, seed_jets
from .wedge import KForm, characteristic_matrix, sharp_box, sharp_lambda, span_rank, wedge

__all__ = [
    "HamiltonianSystem",
    "ham_vf",
    "ham_vf_parts",
    "ham_vf_composed",
    "vf_from_brackets",
    "characteristic_rank",
    "lie_derivative_residual",
]


@dataclass(frozen=True)
class HamiltonianSystem:
    structure: VnjStructure
    hamiltonians: tuple
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        n = self.structure.n
        hs = tuple(as_field(h, n, self.params) for h in self.hamiltonians)
        if len(hs) != n - 1:
            raise InvalidInputError(f"a system of order {n} needs {n - 1} Hamiltonians, got {len(hs)}")
        object.__setattr__(self, "hamiltonians", hs)

    @property
    def n(self):
        return self.structure.n

    @classmethod
    def from_expressions(cls, hamiltonians: Sequence[str], n, rho_lambda="1", rho_box="1", params=None):
        params = dict(params or {})
        S = VnjStructure(n, ScalarField.parse(rho_lambda, n, params), ScalarField.parse(rho_box, n, params))
        return cls(S, tuple(ScalarField.parse(h, n, params) for h in hamiltonians), params)

    def evaluate(self, x):
        """Hamiltonian values, gradients (rows) and the two structure coefficients at x."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise InvalidInputError(f"point must have length {self.n}")
        seeds = seed_jets(x)
        jets = [h(seeds) for h in self.hamiltonians]
        values = np.array([j.value for j in jets])
        grads = np.array([j.grad for j in jets])
        return values, grads, self.structure.rho_lambda.value(x), self.structure.rho_box.value(x)


def _minor(grads, rows, cols):
    return det_generic([[grads[r, c] for c in cols] for r in rows])


def ham_vf_parts(sys, x):
    """The (Lambda-part, Box-part) of the Hamiltonian vector field at x."""
    n = sys.n
    h, g, rl, rb = sys.evaluate(x)
    rows = list(range(n - 1))
    lam = np.zeros(n)
    for k in range(n - 1):
        cols = [c for c in range(n) if c != k]
        lam[k] = (-1.0) ** (n - (k + 1)) * rl * _minor(g, rows, cols)
    lam[n - 1] = rl * _minor(g, rows, range(n - 1))

    box = np.zeros(n)
    if rb != 0.0:
        for i in range(n - 1):
            others = [r for r in rows if r != i]
            # component x^{n-1}: Jacobian in x^1..x^{n-2}
            box[n - 2] += (-1.0) ** i * h[i] * rb * _minor(g, others, range(n - 2))
            for j in range(n - 2):
                cols = [c for c in range(n - 1) if c != j]
                sign = (-1.0) ** (n - (j + 1) + (i + 1) - 2)
                box[j] += sign * h[i] * rb * _minor(g, others, cols)
    return lam, box


def ham_vf(sys, x):
    """X_{H_1..H_{n-1}}(x) from the coordinate formula."""
    lam, box = ham_vf_parts(sys, x)
    return lam + box


def ham_vf_composed(sys, x):
    """The same field assembled from sharp maps of wedge products of dH_i."""
    n = sys.n
    h, g, _, _ = sys.evaluate(x)
    S = sys.structure
    d = [KForm.from_covector(row) for row in g]
    out = sharp_lambda(S, wedge(*d), x)
    if not S.box_vanishes:
        for i in range(n - 1):
            rest = d[:i] + d[i + 1:]
            out = out + (-1.0) ** i * h[i] * sharp_box(S, wedge(*rest), x)
    return out


def vf_from_brackets(sys, x):
    """Component k equals {H_1..H_{n-1}, x^k} - (-1)^(n-1) x^k {1, H_1..H_{n-1}}."""
    n = sys.n
    x = np.asarray(x, dtype=float)
    S = sys.structure
    hs = list(sys.hamiltonians)
    box = box_bracket(S, hs, x)
    out = np.zeros(n)
    for k in range(n):
        coord = ScalarField.coordinate(k, n)
        out[k] = nj_bracket(S, hs + [coord], x) - (-1.0) ** (n - 1) * x[k] * box
    return out


def characteristic_rank(S, x):
    """Dimension of Im sharp_lambda(x) + Im sharp_box(x)."""
    return span_rank(characteristic_matrix(S, x))


def lie_derivative_residual(S, fs: Sequence, gs: Sequence, x, step=1e-5) -> Residual:
    """(L_X Lambda)(dg_1..dg_n) at x for X = sharp_box(df_1 ^ .. ^ df_{n-2}).

    Evaluates X(Lambda(dg..)) - sum_i Lambda(dg_1, .., d(X g_i), .., dg_n).  The
    first term is a central difference along X; the rest is exact.  Only
    constant structure coefficients are supported, since position-dependent
    ones would need third derivatives of the inputs.
    """
    n = S.n
    if not S.is_flat_constant:
        raise InvalidInputError("lie_derivative_residual needs constant rho_lambda and rho_box")
    fs = [as_field(f, n) for f in fs]
    gs = [as_field(g, n) for g in gs]
    if len(fs) != n - 2 or len(gs) != n:
        raise InvalidInputError(f"need {n - 2} generating functions and {n} test functions")
    x = np.asarray(x, dtype=float)
    rl = S.rho_lambda.constant_value
    rb = S.rho_box.constant_value
    seeds = seed_jets(x)
    fj = [f(seeds) for f in fs]
    gj = [g(seeds) for g in gs]

    # X^k = Box(df_1..df_{n-2}, dx^k) as first-order jets
    X = []
    for k in range(n):
        if k == n - 1:
            X.append(None)
            continue
        rows = [[partial(f, c) for c in range(n - 1)] for f in fj]
        rows.append([1.0 if c == k else 0.0 for c in range(n - 1)])
        X.append(rb * det_generic(rows))
    xv = np.array([0.0 if Xk is None else (Xk.value if hasattr(Xk, "value") else float(Xk)) for Xk in X])

    def phi(y):
        ys = seed_jets(y)
        return rl * det_generic([list(g(ys).grad) for g in gs])

    directional = (phi(x + step * xv) - phi(x - step * xv)) / (2.0 * step)

    grads = [gk.grad for gk in gj]
    terms = [directional]
    correction = 0.0
    for i in range(n):
        dxg = np.zeros(n)
        for k in range(n - 1):
            Xk = X[k]
            if hasattr(Xk, "grad"):
                dxg += Xk.grad * grads[i][k] + Xk.value * gj[i].hess[k]
            else:
                dxg += float(Xk) * gj[i].hess[k]
        mat = [list(grads[m]) if m != i else list(dxg) for m in range(n)]
        t = rl * det_generic(mat)
        terms.append(t)
        correction += t
    return Residual(float(directional - correction), _scale(terms))
