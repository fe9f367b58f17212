"""Fixed-step RK4 integration of autonomous vector fields."""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DivergenceError, InvalidInputError

__all__ = ["Trajectory", "integrate", "rk4_step", "DIVERGENCE_BOUND", "format_float"]

# Any state component beyond this magnitude aborts the integration.
DIVERGENCE_BOUND = 1e12


def format_float(v):
    """Shortest representation that round-trips."""
    return repr(float(v))


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=float)
        if self.states.ndim != 2 or self.states.shape[0] != self.times.shape[0]:
            raise InvalidInputError("times and states must have matching lengths")

    def __len__(self):
        return self.times.shape[0]

    @property
    def final(self):
        return self.states[-1]

    def to_csv(self, names=None):
        dim = self.states.shape[1]
        names = names or [f"x{i + 1}" for i in range(dim)]
        buf = io.StringIO()
        buf.write(",".join(["t", *names]) + "\n")
        for t, row in zip(self.times, self.states):
            buf.write(",".join([format_float(t), *(format_float(v) for v in row)]) + "\n")
        return buf.getvalue()


def _check(x, t):
    if not np.all(np.isfinite(x)) or np.max(np.abs(x), initial=0.0) > DIVERGENCE_BOUND:
        raise DivergenceError(t)


def rk4_step(f, x, h):
    k1 = np.asarray(f(x), dtype=float)
    k2 = np.asarray(f(x + 0.5 * h * k1), dtype=float)
    k3 = np.asarray(f(x + 0.5 * h * k2), dtype=float)
    k4 = np.asarray(f(x + h * k3), dtype=float)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate(field: Callable, x0, t0, t1, h, stop_when: Callable | None = None) -> Trajectory:
    """Integrate dx/dt = field(x) from t0 to exactly t1 with step h.

    The last step is shortened to land on t1.  ``stop_when(t, x)`` may end
    the trajectory early; ``meta["stopped"]`` records that it did.
    """
    if not h > 0:
        raise InvalidInputError("step size must be positive")
    if not t1 > t0:
        raise InvalidInputError("t1 must exceed t0")
    x = np.array(x0, dtype=float)
    if x.ndim != 1:
        raise InvalidInputError("initial state must be a vector")
    _check(x, t0)
    times = [float(t0)]
    states = [x.copy()]
    stopped = False
    i = 0
    t = float(t0)
    while t < t1:
        if stop_when is not None and stop_when(t, x):
            stopped = True
            break
        t_next = t0 + (i + 1) * h
        if t_next > t1 or t1 - t_next < 1e-9 * h:
            t_next = t1
        x = rk4_step(field, x, t_next - t)
        _check(x, t_next)
        t = t_next
        i += 1
        times.append(t)
        states.append(x.copy())
    return Trajectory(np.array(times), np.array(states),
                      {"method": "rk4", "step": float(h), "stopped": stopped})
