"""Geometric Hamilton-Jacobi theory on flat volume Nambu-Jacobi structures.

A section ``gamma(x^1..x^{n-1}) = (x^1..x^{n-1}, gamma^n(x))`` projects the
Hamiltonian field ``X`` to ``X^gamma = T pi . X . gamma`` on the base.  The
two fields are gamma-related exactly when the scalar HJ residual

    sum_{k<n} X^k(gamma(x)) d_k gamma^n(x) - X^n(gamma(x))

vanishes, which is a quasi-linear first-order PDE for ``gamma^n``.  The
solver here integrates its characteristics and returns a point cloud.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .brackets import Residual, _scale, det_generic
from .errors import InvalidInputError
from .exprlang import ScalarField, as_field, evaluate, parse
from .fields import HamiltonianSystem, ham_vf
from .flows import format_float, integrate

__all__ = [
    "Section",
    "QuasiLinearPde",
    "Cloud",
    "CloudResidual",
    "project_vf",
    "relatedness_residual",
    "hj_residual",
    "theorem_sign",
    "assemble_hj_pde",
    "solve_characteristics",
    "estimate_cloud_residual",
    "lift_trajectory",
]


@dataclass(frozen=True)
class Section:
    """Graph of gamma^n over the first n-1 coordinates."""

    n: int
    gamma_n: ScalarField

    def __post_init__(self):
        object.__setattr__(self, "gamma_n", as_field(self.gamma_n, self.n - 1))

    @classmethod
    def parse(cls, text, n, params=None):
        return cls(n, ScalarField.parse(text, n - 1, params))

    def _base(self, xN):
        xN = np.asarray(xN, dtype=float)
        if xN.shape != (self.n - 1,):
            raise InvalidInputError(f"base point must have length {self.n - 1}")
        return xN

    def lift(self, xN):
        xN = self._base(xN)
        return np.append(xN, self.gamma_n.value(xN))

    def jet(self, xN):
        return self.gamma_n.jet(self._base(xN))


def project_vf(sys, sec, xN):
    """First n-1 components of X at gamma(xN)."""
    return ham_vf(sys, sec.lift(xN))[:-1]


def relatedness_residual(sys, sec, xN):
    """X(gamma(xN)) - T gamma (X^gamma(xN)); only the last component can be nonzero."""
    g = sec.jet(xN)
    X = ham_vf(sys, np.append(np.asarray(xN, dtype=float), g.value))
    base = X[:-1]
    tangent = np.append(base, float(np.dot(base, g.grad)))
    r = X - tangent
    if np.any(r[:-1] != 0.0):
        raise AssertionError("base components of the relatedness residual must vanish")
    return r


def hj_residual(sys, sec, xN) -> Residual:
    """The Hamilton-Jacobi residual written out in Jacobian minors.

    Every Jacobian is taken of the Hamiltonians at gamma(xN); the Box terms
    carry H_i evaluated there as well.
    """
    n = sys.n
    g = sec.jet(xN)
    dg = g.grad
    h, G, rl, rb = sys.evaluate(np.append(np.asarray(xN, dtype=float), g.value))
    rows = list(range(n - 1))

    def minor(rs, cols):
        return det_generic([[G[r, c] for c in cols] for r in rs])

    terms = []
    for k in range(n - 1):
        cols = [c for c in range(n) if c != k]
        terms.append((-1.0) ** (n - (k + 1)) * rl * minor(rows, cols) * dg[k])
    terms.append(-rl * minor(rows, range(n - 1)))
    if rb != 0.0:
        for i in range(n - 1):
            others = [r for r in rows if r != i]
            terms.append((-1.0) ** i * h[i] * rb * minor(others, range(n - 2)) * dg[n - 2])
            for j in range(n - 2):
                cols = [c for c in range(n - 1) if c != j]
                sign = (-1.0) ** (n - (j + 1) + (i + 1) - 2)
                terms.append(sign * h[i] * rb * minor(others, cols) * dg[j])
    return Residual(float(sum(terms)), _scale(terms))


@lru_cache(maxsize=None)
def theorem_sign():
    """The fixed factor s with hj_residual == s * relatedness_residual[-1].

    Calibrated once from a reference system whose residuals are nonzero.
    """
    from .brackets import VnjStructure

    S = VnjStructure.nambu_poisson(3)
    sys = HamiltonianSystem(S, (ScalarField.parse("x1", 3), ScalarField.parse("x3", 3)))
    sec = Section.parse("x2", 3)
    xN = np.array([0.3, 0.4])
    a = hj_residual(sys, sec, xN).value
    b = relatedness_residual(sys, sec, xN)[-1]
    return 1.0 if a * b > 0 else -1.0


def lift_trajectory(sec, traj):
    """Apply gamma to every state of a base trajectory."""
    return np.array([sec.lift(s) for s in traj.states])


# -- quasi-linear PDEs and characteristics ----------------------------------

@dataclass(frozen=True)
class QuasiLinearPde:
    """sum_k A_k(x, u) du/dx^k = B(x, u) on R^m."""

    m: int
    coefficients: Callable[[np.ndarray, float], tuple]
    name: str = "pde"

    @classmethod
    def from_expressions(cls, coefficient_texts: Sequence[str], source_text: str, params=None):
        """Coefficients in ``x1..xm`` and the unknown ``u``."""
        params = {k: float(v) for k, v in (params or {}).items()}
        if "u" in params:
            raise InvalidInputError("'u' is reserved for the unknown")
        m = len(coefficient_texts)
        names = set(params) | {"u"}
        a_exprs = [parse(t, m, names) for t in coefficient_texts]
        b_expr = parse(source_text, m, names)

        def coefficients(xN, u):
            env = dict(params, u=float(u))
            xs = [float(v) for v in xN]
            return (np.array([evaluate(e, xs, env) for e in a_exprs], dtype=float),
                    float(evaluate(b_expr, xs, env)))

        return cls(m, coefficients, name=f"{list(coefficient_texts)} . grad u = {source_text}")

    def __call__(self, xN, u):
        A, B = self.coefficients(np.asarray(xN, dtype=float), float(u))
        return np.asarray(A, dtype=float), float(B)

    def residual(self, xN, u, grad):
        A, B = self(xN, u)
        return float(np.dot(A, grad) - B)


def assemble_hj_pde(sys: HamiltonianSystem) -> QuasiLinearPde:
    """The HJ equation as a PDE for gamma^n, with x^n replaced by the unknown u."""

    def coefficients(xN, u):
        X = ham_vf(sys, np.append(xN, u))
        return X[:-1], float(X[-1])

    return QuasiLinearPde(sys.n - 1, coefficients, name="hamilton-jacobi")


@dataclass
class Cloud:
    points: np.ndarray
    u: np.ndarray
    seed_id: np.ndarray
    s: np.ndarray
    flags: dict = field(default_factory=dict)

    @property
    def m(self):
        return self.points.shape[1]

    def __len__(self):
        return self.u.shape[0]

    def to_csv(self):
        buf = io.StringIO()
        buf.write(",".join([*(f"x{i + 1}" for i in range(self.m)), "u", "seed_id", "s"]) + "\n")
        for p, u, sid, s in zip(self.points, self.u, self.seed_id, self.s):
            buf.write(",".join([*(format_float(v) for v in p), format_float(u), str(int(sid)), format_float(s)]) + "\n")
        return buf.getvalue()


def solve_characteristics(pde: QuasiLinearPde, initial, t_max, h, degenerate_tol=1e-12) -> Cloud:
    """Integrate dx/ds = A(x, u), du/ds = B(x, u) both ways from every seed.

    ``initial`` is a sequence of ``(base_point, u)`` pairs on a
    non-characteristic surface.  A characteristic whose A falls below
    ``degenerate_tol`` stops there and its seed is flagged ``"degenerate"``.
    """
    if not t_max > 0:
        raise InvalidInputError("t_max must be positive")
    m = pde.m

    def F(y):
        A, B = pde(y[:m], y[m])
        return np.append(A, B)

    def negF(y):
        return -F(y)

    def degenerate(t, y):
        A, _ = pde(y[:m], y[m])
        return bool(np.max(np.abs(A), initial=0.0) < degenerate_tol)

    pts, us, ids, ss = [], [], [], []
    flags = {}
    for sid, (xN, u0) in enumerate(initial):
        y0 = np.append(np.asarray(xN, dtype=float), float(u0))
        if y0.shape != (m + 1,):
            raise InvalidInputError(f"seed {sid} must have {m} base coordinates")
        fwd = integrate(F, y0, 0.0, t_max, h, stop_when=degenerate)
        bwd = integrate(negF, y0, 0.0, t_max, h, stop_when=degenerate)
        flags[sid] = "degenerate" if (fwd.meta["stopped"] or bwd.meta["stopped"]) else "ok"
        states = np.vstack([bwd.states[:0:-1], fwd.states])
        svals = np.concatenate([-bwd.times[:0:-1], fwd.times])
        pts.append(states[:, :m])
        us.append(states[:, m])
        ss.append(svals)
        ids.append(np.full(svals.shape[0], sid, dtype=int))
    if not pts:
        raise InvalidInputError("no initial data")
    return Cloud(np.vstack(pts), np.concatenate(us), np.concatenate(ids), np.concatenate(ss), flags)


class CloudResidual(NamedTuple):
    max: float
    median: float
    residuals: np.ndarray  # NaN where the local fit was rejected
    excluded: int

    def as_dict(self):
        return {"max": self.max, "median": self.median, "excluded": self.excluded,
                "points": int(self.residuals.shape[0])}


def _design(D, degree):
    if degree == 1:
        return D
    m = D.shape[1]
    quad = [D[:, a] * D[:, b] for a in range(m) for b in range(a, m)]
    return np.column_stack([D, *quad])


def estimate_cloud_residual(cloud: Cloud, pde: QuasiLinearPde, n_neighbors=None, degree=1,
                            max_condition=1e8) -> CloudResidual:
    """Estimate |A . grad u - B| at every cloud point.

    The gradient comes from an inverse-distance weighted least-squares fit of
    u over the nearest neighbours (default ``2m + 2``), anchored at the point.
    ``degree=2`` adds quadratic terms to the local model.  Fits whose
    column-equilibrated condition number exceeds ``max_condition`` are
    excluded and counted.
    """
    m = cloud.m
    k = n_neighbors or 2 * m + 2
    if degree not in (1, 2):
        raise InvalidInputError("degree must be 1 or 2")
    unknowns = m if degree == 1 else m + m * (m + 1) // 2
    if k < unknowns:
        raise InvalidInputError(f"{k} neighbours cannot determine {unknowns} local unknowns")
    if len(cloud) < k + 1:
        raise InvalidInputError(f"cloud has {len(cloud)} points, need at least {k + 1}")
    tree = cKDTree(cloud.points)
    dist, idx = tree.query(cloud.points, k=k + 1)
    res = np.full(len(cloud), np.nan)
    excluded = 0
    for p in range(len(cloud)):
        nb = [q for q in idx[p] if q != p][:k]
        D = cloud.points[nb] - cloud.points[p]
        du = cloud.u[nb] - cloud.u[p]
        d = np.linalg.norm(D, axis=1)
        if np.any(d == 0.0):
            excluded += 1
            continue
        w = 1.0 / d
        M = _design(D, degree) * w[:, None]
        norms = np.linalg.norm(M, axis=0)
        if np.any(norms == 0.0) or np.linalg.cond(M / norms) > max_condition:
            excluded += 1
            continue
        coef, *_ = np.linalg.lstsq(M, du * w, rcond=None)
        res[p] = abs(pde.residual(cloud.points[p], cloud.u[p], coef[:m]))
    good = res[~np.isnan(res)]
    if good.size == 0:
        return CloudResidual(float("nan"), float("nan"), res, excluded)
    return CloudResidual(float(good.max()), float(np.median(good)), res, excluded)
