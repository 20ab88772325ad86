"""Bracketed bisection helpers shared by the power-control solvers.

All per-state stationarity conditions in this package are strictly
decreasing in the power level, so bisection with an upward-expanding
bracket is unconditionally safe, including at activation thresholds where
the root approaches zero.
"""

from __future__ import annotations

from typing import Callable

import numpy as np


class SolverError(RuntimeError):
    """A solver failed to bracket or converge; message carries diagnostics."""


def vector_bisect_decreasing(residual: Callable[[np.ndarray], np.ndarray],
                             n: int, hi0: float = 1.0, rtol: float = 1e-10,
                             maxiter: int = 200,
                             context: str = "") -> np.ndarray:
    """Roots of elementwise-decreasing residuals with residual(0) > 0.

    residual maps an array of n power levels to an array of residuals;
    positive residual means the root lies to the right.  Returns one root
    per element, located to relative tolerance rtol.
    """
    if n == 0:
        return np.empty(0)
    lo = np.zeros(n)
    hi = np.full(n, float(hi0))
    need = residual(hi) > 0
    expansions = 0
    while need.any():
        if expansions >= 80:
            raise SolverError(
                f"bracket expansion failed{' in ' + context if context else ''}: "
                f"{int(need.sum())} states unbracketed at hi={hi.max():.3e}")
        hi = np.where(need, hi * 2.0, hi)
        need = residual(hi) > 0
        expansions += 1
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        pos = residual(mid) > 0
        lo = np.where(pos, mid, lo)
        hi = np.where(pos, hi, mid)
        if np.all(hi - lo <= rtol * np.maximum(hi, 1e-30)):
            break
    else:
        k = int(np.argmax(hi - lo))
        raise SolverError(
            f"bisection did not converge{' in ' + context if context else ''}: "
            f"widest bracket [{lo[k]:.6e}, {hi[k]:.6e}]")
    return 0.5 * (lo + hi)


def scalar_bisect_decreasing(residual: Callable[[float], float],
                             target: float, x0: float, *,
                             rtol: float = 1e-6, maxiter: int = 300,
                             context: str = "") -> tuple[float, float, int]:
    """Solve residual(x) = target for a decreasing residual by bisection.

    Brackets by halving/doubling from x0, then bisects until the residual
    matches the target to relative tolerance rtol.  Returns (x, achieved
    residual, iterations).
    """
    lo = hi = float(x0)
    guard = 0
    while residual(lo) < target:
        lo *= 0.5
        guard += 1
        if guard > 1100 or lo == 0.0:
            raise SolverError(
                f"bracket expansion failed{' in ' + context if context else ''}: "
                f"target {target:.3e} unreachable from below")
    guard = 0
    while residual(hi) > target:
        hi *= 2.0
        guard += 1
        if guard > 1100 or not np.isfinite(hi):
            raise SolverError(
                f"bracket expansion failed{' in ' + context if context else ''}: "
                f"target {target:.3e} unreachable from above")
    x, val = hi, residual(hi)
    for it in range(maxiter):
        if abs(val - target) <= rtol * abs(target):
            return x, val, it
        x = 0.5 * (lo + hi)
        val = residual(x)
        if val > target:
            lo = x
        else:
            hi = x
        if hi - lo <= 1e-15 * max(hi, 1e-30):
            return x, val, it
    return x, val, maxiter
