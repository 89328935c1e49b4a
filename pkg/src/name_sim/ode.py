"""Explicit Runge-Kutta integrators.

Two entry points: an adaptive embedded Fehlberg 4(5) pair with per-accepted-
step callbacks (used by the master-equation solvers), and a fixed-step
explicit scheme with a configurable tableau (used by the composite-bath
benchmark, which follows a constant time step).
"""

from __future__ import annotations

import math

import numpy as np

from .errors import SolverError

# Fehlberg 4(5) extended Butcher table; the 5th order solution is propagated.
_FEHLBERG_A = (
    (),
    (1 / 4,),
    (3 / 32, 9 / 32),
    (1932 / 2197, -7200 / 2197, 7296 / 2197),
    (439 / 216, -8.0, 3680 / 513, -845 / 4104),
    (-8 / 27, 2.0, -3544 / 2565, 1859 / 4104, -11 / 40),
)
_FEHLBERG_C = (0.0, 1 / 4, 3 / 8, 12 / 13, 1.0, 1 / 2)
_FEHLBERG_B5 = (16 / 135, 0.0, 6656 / 12825, 28561 / 56430, -9 / 50, 2 / 55)
_FEHLBERG_B4 = (25 / 216, 0.0, 1408 / 2565, 2197 / 4104, -1 / 5, 0.0)

_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_DP_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_DP_B = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)

_CLASSIC_A = ((), (1 / 2,), (0.0, 1 / 2), (0.0, 0.0, 1.0))
_CLASSIC_C = (0.0, 1 / 2, 1 / 2, 1.0)
_CLASSIC_B = (1 / 6, 1 / 3, 1 / 3, 1 / 6)

FIXED_TABLEAUS = {
    "classic": (_CLASSIC_A, _CLASSIC_C, _CLASSIC_B, False),
    "fehlberg": (_FEHLBERG_A, _FEHLBERG_C, _FEHLBERG_B5, False),
    "dormand_prince": (_DP_A, _DP_C, _DP_B, True),  # FSAL
}

MAX_STEPS = 2_000_000


def _error_norm(err, y_old, y_new, rtol, atol):
    scale = atol + rtol * np.maximum(np.abs(y_old), np.abs(y_new))
    return math.sqrt(float(np.mean((err / scale) ** 2)))


def integrate_adaptive(
    f,
    t_grid,
    y0,
    rtol: float = 1e-8,
    atol: float = 1e-10,
    dt_max: float | None = None,
    on_step=None,
):
    """Integrate dy/dt = f(t, y) through the points of t_grid (RKF45).

    Steps land exactly on every grid point (no dense output is needed for the
    smooth right-hand sides this package integrates).  ``on_step(t, y)`` runs
    after every accepted step and may raise to abort.  Returns an array of the
    solution at the grid points, shape (len(t_grid), len(y0)).
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or len(t_grid) < 1 or np.any(np.diff(t_grid) < 0):
        raise ValueError("t_grid must be a non-decreasing 1-D array")
    y = np.array(y0, dtype=float)
    out = np.empty((len(t_grid), y.size))
    out[0] = y
    t = t_grid[0]
    span = t_grid[-1] - t_grid[0]
    if span == 0.0:
        return np.repeat(out[:1], len(t_grid), axis=0)

    h = span / 128.0
    if dt_max is not None:
        h = min(h, dt_max)
    n_eval = 0
    for i, t_target in enumerate(t_grid[1:], start=1):
        while t < t_target:
            h = min(h, t_target - t)
            if h <= abs(t) * 1e-15 + 1e-300:
                raise SolverError(f"step size underflow at t = {t}")
            k = [f(t, y)]
            for row, c in zip(_FEHLBERG_A[1:], _FEHLBERG_C[1:]):
                yi = y + h * sum(a * ki for a, ki in zip(row, k))
                k.append(f(t + c * h, yi))
            n_eval += 6
            if n_eval > 6 * MAX_STEPS:
                raise SolverError("maximum number of steps exceeded")
            y5 = y + h * sum(b * ki for b, ki in zip(_FEHLBERG_B5, k))
            y4 = y + h * sum(b * ki for b, ki in zip(_FEHLBERG_B4, k))
            err = _error_norm(y5 - y4, y, y5, rtol, atol)
            if err <= 1.0:
                t = t + h
                y = y5
                if on_step is not None:
                    on_step(t, y)
                grow = 5.0 if err == 0.0 else min(5.0, 0.9 * err ** -0.2)
                h *= grow
            else:
                h *= max(0.2, 0.9 * err ** -0.2)
            if dt_max is not None:
                h = min(h, dt_max)
        out[i] = y
    return out


def integrate_fixed(
    f,
    t0: float,
    t1: float,
    y0,
    dt: float,
    tableau: str = "dormand_prince",
    record_every: int = 1,
    sample=None,
):
    """Fixed-step explicit RK integration of dy/dt = f(t, y).

    ``sample(t, y)`` reduces the state to whatever should be recorded (the
    full state by default); records are taken at the start, every
    ``record_every``-th step, and at t1.  Returns (times, records).
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if tableau not in FIXED_TABLEAUS:
        raise ValueError(f"unknown tableau {tableau!r}; options: {list(FIXED_TABLEAUS)}")
    a_rows, c_nodes, b_weights, fsal = FIXED_TABLEAUS[tableau]
    if sample is None:
        sample = lambda t, y: np.array(y, copy=True)

    y = np.array(y0, dtype=float, copy=True)
    t = t0
    n_steps = max(1, int(math.ceil((t1 - t0) / dt - 1e-9)))
    times = [t0]
    records = [sample(t0, y)]
    k1 = None
    for step in range(n_steps):
        h = min(dt, t1 - t)
        k = [f(t, y) if k1 is None else k1]
        for row, c in zip(a_rows[1:], c_nodes[1:]):
            yi = y + h * sum(a * ki for a, ki in zip(row, k) if a != 0.0)
            k.append(f(t + c * h, yi))
        y = y + h * sum(b * ki for b, ki in zip(b_weights, k) if b != 0.0)
        t = t0 + (step + 1) * dt if step + 1 < n_steps else t1
        k1 = k[-1] if (fsal and h == dt) else None
        if (step + 1) % record_every == 0 or step + 1 == n_steps:
            times.append(t)
            records.append(sample(t, y))
    return np.asarray(times), records
