"""Dormand-Prince 5(4) integrator with an admissibility check on every stage.

Written here rather than taken from ``scipy.integrate`` because tatonnement
needs a step to be *rejected* (and the step halved) whenever a stage would
evaluate the vector field at an inadmissible state such as a non-positive
price; library steppers have no hook for that.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Butcher tableau (Dormand & Prince 1980); the 5th-order row is also the last stage (FSAL)
C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
E = B5 - B4

MIN_STEP = 1e-12


class StepFloor(Exception):
    """Step size fell below the floor; ``reason`` tells why."""

    def __init__(self, t, h, reason):
        self.t, self.h, self.reason = t, h, reason
        super().__init__(f"step size {h:.3e} below floor at t={t:.6g} ({reason})")


@dataclass
class Solution:
    steps: int = 0
    rejected: int = 0
    status: str = "running"  # finished | stopped


def _initial_step(y0, f0, rtol, atol):
    scale = atol + rtol * np.max(np.abs(y0))
    d0 = np.max(np.abs(y0)) / scale
    d1 = np.max(np.abs(f0)) / scale
    return 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1


def dopri5(f, t_span, y0, rtol=1e-8, atol=1e-12, admissible=None, stop=None, callback=None,
           h0=None, max_steps=10_000_000, min_step=MIN_STEP):
    """Integrate ``y' = f(t, y)`` over ``t_span``.

    Local error control: ``||err||_inf <= atol + rtol * max(||y_old||_inf, ||y_new||_inf)``.
    ``admissible(y)`` is checked before every stage evaluation; a ``False``
    rejects the step and halves ``h``.  ``stop(t, y)`` returning ``True`` ends
    the integration early (status ``"stopped"``).  ``callback(t, y)`` sees every
    accepted step.  Raises :class:`StepFloor` once ``h < min_step``.
    """
    t0, t1 = map(float, t_span)
    y = np.array(y0, dtype=float)
    t = t0
    sol = Solution()
    if callback:
        callback(t, y)
    if stop is not None and stop(t, y):
        sol.status = "stopped"
        return sol, t, y
    k = np.empty((7, y.size))
    k[0] = f(t, y)
    h = h0 if h0 is not None else _initial_step(y, k[0], rtol, atol)
    h = min(h, t1 - t)
    while t1 - t > 1e-14 * max(1.0, abs(t1)):
        if sol.steps >= max_steps:
            raise StepFloor(t, h, "maximum step count reached")
        h = min(h, t1 - t)
        if h < min_step and t1 - t > min_step:
            raise StepFloor(t, h, "error control")
        ok = True
        for s in range(1, 7):
            ys = y + h * (np.asarray(A[s]) @ k[:s])
            if admissible is not None and not admissible(ys):
                ok = False
                break
            k[s] = f(t + C[s] * h, ys)
        if not ok:
            sol.rejected += 1
            h *= 0.5
            if h < min_step:
                raise StepFloor(t, h, "inadmissible stage")
            continue
        y_new = ys  # last stage is the 5th-order solution
        err = h * (E @ k)
        scale = atol + rtol * max(np.max(np.abs(y)), np.max(np.abs(y_new)))
        ratio = np.max(np.abs(err)) / scale
        if ratio <= 1.0:
            t += h
            y = y_new
            k[0] = k[6]
            sol.steps += 1
            if callback:
                callback(t, y)
            if stop is not None and stop(t, y):
                sol.status = "stopped"
                return sol, t, y
            fac = 5.0 if ratio == 0 else min(5.0, 0.9 * ratio ** (-0.2))
        else:
            sol.rejected += 1
            fac = max(0.2, 0.9 * ratio ** (-0.2))
        h *= fac
    sol.status = "finished"
    return sol, t, y
