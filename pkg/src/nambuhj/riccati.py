"""Four coupled Riccati equations as a volume Nambu-Jacobi system.

The system ``dx^i/dt = a0 + a1 x^i + a2 (x^i)^2`` lives on the open set of
points with pairwise distinct coordinates.  Hamiltonians ``H_l`` are indexed
``l = 1..4``; a system uses three of them, mapped in order to the slots
``(H_1, H_2, H_3)`` of the bracket.  The default choice is ``(2, 3, 4)``.

The canonical bracket of the chosen Hamiltonians reproduces the Riccati
field only up to a common factor ``c(x)``.  :func:`riccati_system` measures
that factor per component, checks that the four measurements agree and then
installs it as ``rho_lambda``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .brackets import VnjStructure, det_generic, lambda_bracket
from .errors import DegeneratePointError, DomainError, InvalidInputError
from .exprlang import ScalarField
from .fields import HamiltonianSystem
from .hj import assemble_hj_pde
from .jets import Jet2, partial, seed_jets

__all__ = [
    "RiccatiParams",
    "check_domain",
    "sample_domain",
    "riccati_rhs",
    "hamiltonian_l",
    "hamiltonian_expression",
    "hamiltonian_field",
    "f_factor",
    "verify_factorization",
    "diagonal_report",
    "conformal_ratios",
    "conformal_spread",
    "riccati_system",
    "riccati_hj",
    "MIN_GAP",
    "DEGENERATE_TOL",
]

MIN_GAP = 1e-9
DEGENERATE_TOL = 1e-12


@dataclass(frozen=True)
class RiccatiParams:
    a0: float = 0.0
    a1: float = 0.0
    a2: float = 0.0
    b1: float = 0.0

    def __post_init__(self):
        for name in ("a0", "a1", "a2", "b1"):
            v = float(getattr(self, name))
            if not np.isfinite(v):
                raise InvalidInputError(f"{name} must be finite")
            object.__setattr__(self, name, v)

    @classmethod
    def family(cls, b1):
        """The one-parameter family a1 = 0, a2 = -1, a0 = -b1."""
        return cls(-float(b1), 0.0, -1.0, float(b1))

    @property
    def on_family(self):
        return self.a1 == 0.0 and self.a2 == -1.0 and self.a0 == -self.b1


def check_domain(x):
    """Return x as a 4-vector with pairwise distinct coordinates, or raise."""
    x = np.asarray(x, dtype=float)
    if x.shape != (4,):
        raise InvalidInputError("Riccati points have four coordinates")
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("Riccati point must be finite")
    gap = min(abs(x[i] - x[j]) for i in range(4) for j in range(i + 1, 4))
    if not gap > MIN_GAP:
        raise DegeneratePointError("riccati", f"coordinates must be pairwise distinct (min gap {gap:.3g})")
    return x


def sample_domain(rng, count, lo=-2.0, hi=2.0, min_gap=0.2):
    """Random points of the domain whose coordinates are at least min_gap apart."""
    out = []
    while len(out) < count:
        x = rng.uniform(lo, hi, 4)
        if min(abs(x[i] - x[j]) for i in range(4) for j in range(i + 1, 4)) >= min_gap:
            out.append(x)
    return np.array(out)


def riccati_rhs(x, p):
    x = check_domain(x)
    return p.a0 + p.a1 * x + p.a2 * x * x


def _index(l):
    if l not in (1, 2, 3, 4):
        raise InvalidInputError(f"Hamiltonian index must be in 1..4, got {l}")
    return l - 1


def hamiltonian_l(l, x, p):
    """Closed form of H_l (1-based l)."""
    x = check_domain(x)
    i = _index(l)
    xl = x[i]
    pairs = 0.0
    inv = 0.0
    for k in range(4):
        if k < i:
            pairs += x[k] * xl / (x[k] - xl)
            inv += 1.0 / (x[k] - xl)
        elif k > i:
            pairs += xl * x[k] / (xl - x[k])
            inv += 1.0 / (xl - x[k])
    return pairs + p.b1 * inv


def hamiltonian_expression(l):
    """H_l as expression text in x1..x4 and the parameter b1."""
    i = _index(l) + 1
    pairs, inv = [], []
    for k in range(1, 5):
        if k < i:
            pairs.append(f"x{k}*x{i}/(x{k}-x{i})")
            inv.append(f"1/(x{k}-x{i})")
        elif k > i:
            pairs.append(f"x{i}*x{k}/(x{i}-x{k})")
            inv.append(f"1/(x{i}-x{k})")
    return f"({' + '.join(pairs)}) + b1*({' + '.join(inv)})"


def hamiltonian_field(l, p):
    return ScalarField.parse(hamiltonian_expression(l), 4, {"b1": p.b1})


def f_factor(l, j, x):
    x = check_domain(x)
    i, m = _index(l), _index(j)
    if i != m:
        return 1.0 / (x[i] - x[m]) ** 2
    below = sum(1.0 / (x[k] - x[i]) ** 2 for k in range(i))
    above = sum(1.0 / (x[i] - x[k]) ** 2 for k in range(i + 1, 4))
    return below - above


def verify_factorization(l, j, x, p, rtol=1e-10):
    """Compare dH_l/dx^j with F_lj (a0 + a1 x^l + a2 (x^l)^2).

    ``orientation`` is +1 when j < l and -1 when j > l; the closed-form H_l
    satisfies ``measured == orientation * predicted`` on the family.
    """
    if l == j:
        raise InvalidInputError("verify_factorization needs j != l; see diagonal_report")
    x = check_domain(x)
    i, m = _index(l), _index(j)
    measured = float(hamiltonian_field(l, p).jet(x).grad[m])
    xl = x[i]
    predicted = f_factor(l, j, x) * (p.a0 + p.a1 * xl + p.a2 * xl * xl)
    orientation = 1 if m < i else -1
    scale = max(abs(measured), abs(predicted), 1e-300)
    return {
        "l": l,
        "j": j,
        "measured": measured,
        "predicted": predicted,
        "ratio": measured / predicted if predicted != 0.0 else float("nan"),
        "orientation": orientation,
        "agrees": bool(abs(measured - predicted) <= rtol * scale),
        "signed_agrees": bool(abs(measured - orientation * predicted) <= rtol * scale),
    }


def diagonal_report(l, x, p):
    """dH_l/dx^l against F_ll times the Riccati factor at each other x^k.

    The measured value is a signed sum over k, so no single factor is asserted.
    """
    x = check_domain(x)
    i = _index(l)
    measured = float(hamiltonian_field(l, p).jet(x).grad[i])
    rhs = p.a0 + p.a1 * x + p.a2 * x * x
    signed_sum = 0.0
    for k in range(4):
        if k != i:
            signed_sum += (-1.0 if k < i else 1.0) * rhs[k] / (x[k] - x[i]) ** 2
    return {
        "l": l,
        "measured": measured,
        "F_ll": float(f_factor(l, l, x)),
        "per_k": {f"k={k + 1}": float(f_factor(l, l, x) * rhs[k]) for k in range(4) if k != i},
        "signed_sum": float(signed_sum),
    }


def _hamiltonians(p, indices):
    if len(indices) != 3 or len(set(indices)) != 3:
        raise InvalidInputError("choose three distinct Hamiltonian indices")
    return tuple(hamiltonian_field(l, p) for l in indices)


def _canonical_brackets(hs, x):
    S = VnjStructure.canonical(4)
    return np.array([lambda_bracket(S, [*hs, ScalarField.coordinate(i, 4)], x) for i in range(4)])


def conformal_ratios(p, x, indices=(2, 3, 4)):
    """c_i = rhs_i / Lambda(dH_1, dH_2, dH_3, dx^i) on the canonical structure."""
    x = check_domain(x)
    lam = _canonical_brackets(_hamiltonians(p, indices), x)
    if np.min(np.abs(lam)) < DEGENERATE_TOL:
        raise DegeneratePointError("riccati", f"canonical bracket component vanishes at {x.tolist()}")
    return riccati_rhs(x, p) / lam


def conformal_spread(p, points, indices=(2, 3, 4)):
    """max over points and i of |c_i - c_1| / |c_1|."""
    spread = 0.0
    for x in points:
        c = conformal_ratios(p, x, indices)
        spread = max(spread, float(np.max(np.abs(c - c[0])) / abs(c[0])))
    return spread


def _c1_field(p, hs):
    def c1(xs):
        if isinstance(xs[0], Jet2):
            x = np.array([v.value for v in xs])
            check_domain(x)
            jets = [h(xs) for h in hs]
            # Lambda(dH_1, dH_2, dH_3, dx^1) = -det of the x2..x4 minor
            lam = -det_generic([[partial(jh, c) for c in (1, 2, 3)] for jh in jets])
            if abs(lam.value) < DEGENERATE_TOL:
                raise DegeneratePointError("riccati", "canonical bracket component vanishes")
            return (p.a0 + p.a1 * xs[0] + p.a2 * xs[0] * xs[0]) / lam
        x = check_domain([float(v) for v in xs])
        g = np.array([h.jet(x).grad for h in hs])
        lam = -det_generic([[g[r, c] for c in (1, 2, 3)] for r in range(3)])
        if abs(lam) < DEGENERATE_TOL:
            raise DegeneratePointError("riccati", "canonical bracket component vanishes")
        return (p.a0 + p.a1 * x[0] + p.a2 * x[0] * x[0]) / lam

    return ScalarField.from_callable(c1, 4, name="c1")


def riccati_system(p, indices=(2, 3, 4), *, rescale_box=True, points=None, tol=1e-9,
                   force=False, seed=0):
    """The Riccati VNJ system with the measured conformal factor installed.

    The factor is checked for consistency across components at ``points``
    (20 random domain points by default).  Off the parameter family the
    check usually fails; ``force=True`` installs c_1 regardless.  With
    ``rescale_box`` both Lambda and Box are multiplied by the factor, which
    keeps theta = dx^4 fixed; otherwise Box stays canonical.
    """
    if not p.on_family and not force:
        raise InvalidInputError("parameters are off the family a1=0, a2=-1, a0=-b1; pass force=True")
    hs = _hamiltonians(p, indices)
    if points is None:
        points = sample_domain(np.random.default_rng(seed), 20)
    spread = conformal_spread(p, points, indices)
    if spread > tol and not force:
        raise DomainError("riccati", f"conformal ratios disagree across components (spread {spread:.3g})")
    c1 = _c1_field(p, hs)
    S = VnjStructure(4, c1, c1 if rescale_box else ScalarField.constant(1.0, 4))
    return HamiltonianSystem(S, hs, {"b1": p.b1})


def riccati_hj(p, indices=(2, 3, 4), **kwargs):
    return assemble_hj_pde(riccati_system(p, indices, **kwargs))
