"""Seeded random inputs: points in boxes and polynomial expressions."""

from __future__ import annotations

import numpy as np

__all__ = ["make_rng", "random_polynomial", "random_points"]


def make_rng(seed):
    """A generator fully determined by one 64-bit seed."""
    return np.random.default_rng(np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF))


def random_polynomial(rng, n, degree=3, terms=4, coef=2.0):
    """Expression text of a random polynomial in x1..xn.

    ``terms`` monomials of total degree <= ``degree`` with coefficients
    uniform in [-coef, coef].  Coefficients print with repr so parsing the
    text recovers them exactly.
    """
    out = []
    for _ in range(terms):
        d = int(rng.integers(0, degree + 1))
        c = float(rng.uniform(-coef, coef))
        idx = sorted(int(i) for i in rng.integers(0, n, size=d))
        factors = [repr(c)] + [f"x{i + 1}" for i in idx]
        out.append("*".join(factors))
    return " + ".join(f"({t})" for t in out)


def random_points(rng, box, count):
    """``count`` points uniform in a box given as (lo, hi) pairs."""
    box = np.asarray(box, dtype=float)
    return rng.uniform(box[:, 0], box[:, 1], size=(count, box.shape[0]))

