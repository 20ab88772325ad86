"""Independent reference implementations used to validate the fast solvers.

Everything here trades speed for transparency: budget searches are plain
halving/doubling loops, per-state optima come from dense grid scans, and no
root-finding code is shared with the solvers under test.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .fading import ChannelConfig
from .policy import PowerPolicy
from .quadrature import StateGrid

LN2 = math.log(2.0)


@dataclass
class DiscreteInstance:
    """A desk-scale wiretap instance: a handful of joint states."""

    z_m: np.ndarray
    z_e: np.ndarray
    probs: np.ndarray
    budget: float
    gamma: float
    beta: float

    def __post_init__(self) -> None:
        self.z_m = np.asarray(self.z_m, dtype=float)
        self.z_e = np.asarray(self.z_e, dtype=float)
        self.probs = np.asarray(self.probs, dtype=float)
        if not (self.z_m.shape == self.z_e.shape == self.probs.shape):
            raise ValueError("state arrays must have matching shapes")
        if abs(self.probs.sum() - 1.0) > 1e-9:
            raise ValueError("probabilities must sum to 1")
        if self.budget <= 0 or self.gamma <= 0 or self.beta <= 0:
            raise ValueError("budget, gamma and beta must be > 0")

    @property
    def n_states(self) -> int:
        return self.z_m.size

    @classmethod
    def from_grid(cls, grid: StateGrid, cfg: ChannelConfig) -> "DiscreteInstance":
        if grid.n_atoms > 9:
            raise ValueError("instance too large for brute force "
                             f"({grid.n_atoms} states > 9)")
        return cls(grid.z_m.copy(), grid.z_e.copy(), grid.weight.copy(),
                   cfg.avg_snr, cfg.gamma, cfg.beta)


def ergodic_secrecy_power(cfg: ChannelConfig, grid: StateGrid
                          ) -> tuple[PowerPolicy, float]:
    """Maximize the mean secrecy rate (no queueing constraint).

    Per-state stationarity z_M/(1+mu*z_M) - g*z_E/(1+g*mu*z_E) = nu*ln2
    reduces to a quadratic whose positive root (clipped at zero) is the
    allocation; the water level nu is bisected for budget equality.
    """
    g = cfg.gamma
    zm, ze, w = grid.z_m, grid.z_e, grid.weight
    diff = zm - g * ze

    def powers(nu: float) -> np.ndarray:
        c = nu * LN2
        mu = np.zeros_like(zm)
        act = diff > c
        a = c * g * ze[act] * zm[act]
        b = c * (zm[act] + g * ze[act])
        d = c - diff[act]
        disc = np.sqrt(b * b - 4.0 * a * d)
        with np.errstate(divide="ignore", invalid="ignore"):
            root = np.where(a > 0, (-b + disc) / (2.0 * a), -d / b)
        mu[act] = np.maximum(root, 0.0)
        return mu

    def total(nu: float) -> float:
        return float(np.sum(w * powers(nu)))

    lo = hi = float(np.max(diff)) / LN2
    while total(lo) < cfg.avg_snr:
        lo *= 0.5
        if lo < 1e-300:
            raise RuntimeError("ergodic oracle failed to bracket the budget")
    while total(hi) > cfg.avg_snr:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if total(mid) > cfg.avg_snr:
            lo = mid
        else:
            hi = mid
    nu = 0.5 * (lo + hi)
    mu = powers(nu)
    rate = np.where(grid.secure,
                    np.log2(1.0 + mu * zm) - np.log2(1.0 + g * mu * ze), 0.0)
    avg = float(np.sum(w * rate) / np.sum(w))
    return PowerPolicy(np.zeros_like(mu), mu,
                       diagnostics={"nu": nu, "total_power": total(nu)}), avg


def brute_force_wiretap(inst: DiscreteInstance, n_levels: int = 2001,
                        n_multipliers: int = 4000
                        ) -> tuple[np.ndarray, float]:
    """Dense-grid wiretap optimum on a small discrete instance.

    Each state gets n_levels equispaced power levels up to the level that
    alone exhausts the budget; a one-dimensional scan over the price of
    power picks per-state levels, and the cheapest feasible price wins.
    Globally optimal within the level resolution (per-state objectives are
    convex, so the price decomposition is exact).
    """
    if inst.n_states > 9:
        raise ValueError(f"instance too large ({inst.n_states} states > 9)")
    secure = inst.z_m > inst.gamma * inst.z_e
    mu = np.zeros(inst.n_states)
    exposed_mass = float(np.sum(inst.probs[~secure]))
    if not secure.any():
        return mu, 0.0

    zm, ze, p = inst.z_m[secure], inst.z_e[secure], inst.probs[secure]
    levels = np.linspace(0.0, 1.0, n_levels)[None, :] * (inst.budget / p)[:, None]
    y = (1.0 + levels * zm[:, None]) / (1.0 + inst.gamma * levels * ze[:, None])
    cost = p[:, None] * y ** (-inst.beta)       # objective contribution
    spend = p[:, None] * levels                 # budget contribution

    diff = zm - inst.gamma * ze
    t_hi = inst.beta * float(np.max(diff)) * 1.0001
    t_grid = np.concatenate(([0.0], np.geomspace(t_hi * 1e-8, t_hi, n_multipliers)))

    best = None
    for t in t_grid:
        pick = np.argmin(cost + t * spend, axis=1)
        power = float(np.sum(spend[np.arange(p.size), pick]))
        if power <= inst.budget * (1.0 + 1e-12):
            obj = float(np.sum(cost[np.arange(p.size), pick]))
            if best is None or obj < best[0]:
                best = (obj, pick)
    obj, pick = best
    mu[secure] = levels[np.arange(p.size), pick]
    throughput = -math.log(obj + exposed_mass) / (inst.beta * LN2)
    return mu, throughput


def brute_force_pc_state(z_m: float, z_e: float, pc, beta: float, gamma: float,
                         mu_max: float | None = None, n: int = 2000,
                         chunk: int = 128) -> tuple[float, float]:
    """Dense 2-D scan of the per-state weighted-objective contribution.

    With the normalizers and the power price frozen, the contribution of a
    single state separates from the rest of the grid; this maximizes it on
    an n-by-n power grid.  Ties resolve to the lowest flat index.
    """
    if mu_max is None:
        caps = [1.0]
        if np.isfinite(pc.alpha1) and pc.alpha1 > 0:
            caps.append(1.0 / pc.alpha1)
        if np.isfinite(pc.alpha2) and pc.alpha2 > 0:
            caps.append(1.0 / pc.alpha2)
        mu_max = 10.0 * max(caps)
    grid = np.linspace(0.0, mu_max, n)
    c0 = pc.lambda0 / (beta * LN2 * pc.phi0) if pc.lambda0 > 0 else 0.0
    c1 = pc.lambda1 / (beta * LN2 * pc.phi1) if pc.lambda1 > 0 else 0.0
    g_ze = gamma * z_e

    if z_m <= g_ze:
        obj = -c0 * (1.0 + grid * z_m) ** (-beta) - pc.kappa * grid
        return float(grid[int(np.argmax(obj))]), 0.0

    best_val, best_idx = -np.inf, (0, 0)
    mu1 = grid[None, :]
    den = 1.0 + g_ze * mu1
    y_term = -c1 * ((1.0 + mu1 * z_m) / den) ** (-beta)
    for start in range(0, n, chunk):
        mu0 = grid[start:start + chunk, None]
        x = 1.0 + g_ze * mu0 / den
        obj = -c0 * x ** (-beta) + y_term - pc.kappa * (mu0 + mu1)
        k = int(np.argmax(obj))
        val = float(obj.flat[k])
        if val > best_val:
            best_val = val
            best_idx = (start + k // n, k % n)
    return float(grid[best_idx[0]]), float(grid[best_idx[1]])


def single_message_effcap(gains: np.ndarray, weights: np.ndarray, beta: float,
                          budget: float) -> tuple[np.ndarray, float]:
    """Effective-capacity maximizer for a single message over scalar gains.

    Classic one-user power control: mu(g) = [(g/c)^(1/(beta+1)) - 1]/g
    clipped at zero, with the level c chosen for budget equality.  Used as
    the reduction oracle for the common-message-only corner.
    """
    g = np.asarray(gains, dtype=float)
    w = np.asarray(weights, dtype=float)
    pos = g > 0

    def powers(c: float) -> np.ndarray:
        mu = np.zeros_like(g)
        t = (g[pos] / c) ** (1.0 / (beta + 1.0))
        mu[pos] = np.maximum((t - 1.0) / g[pos], 0.0)
        return mu

    def excess(c: float) -> float:
        return float(np.sum(w * powers(c))) - budget

    hi = float(np.max(g[pos]))
    lo = hi
    while excess(lo) < 0:
        lo *= 0.5
        if lo < 1e-300:
            raise RuntimeError("single-message oracle failed to bracket")
    c = brentq(excess, lo, hi, xtol=1e-300, rtol=1e-14)
    mu = powers(c)
    val = float(np.sum(w * (1.0 + mu * g) ** (-beta)) / np.sum(w))
    return mu, -math.log2(val) / beta
