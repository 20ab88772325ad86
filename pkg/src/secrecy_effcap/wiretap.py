"""Optimal power control for the confidential-messages-only link.

Two adaptation modes are solved: power as a function of both channel gains
(full CSI) and power as a function of the legitimate channel alone (main
CSI).  Both are convex programs; the per-state stationarity condition is
strictly decreasing in the power level, so each state is solved by
bracketed bisection, and an outer bisection on the budget multiplier pins
the average power to the SNR budget with equality.

In both modes the optimal policy has a hard activation threshold: full-CSI
power is positive exactly on states with z_M - gamma*z_E above lambda/beta,
main-CSI power exactly on z_M above a threshold alpha determined by the
eavesdropper's distribution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .effcap import effective_capacity
from .fading import (ChannelConfig, FadingDistribution, FadingState,
                     secrecy_rate_values)
from .policy import PowerPolicy
from .quadrature import StateGrid, _axis_cells, _cells_below, _axis_e
from .roots import SolverError, scalar_bisect_decreasing, vector_bisect_decreasing

BUDGET_RTOL = 1e-6      # outer multiplier search
BUDGET_CHECK = 1e-4     # hard feasibility check on the returned policy
MU_RTOL = 1e-10         # per-state bisection


@dataclass
class WiretapSolution:
    """Solved confidential-only power control on a state grid.

    mode        "full" or "main"
    policy      per-atom allocation (mu0 is identically zero)
    lam         budget multiplier at equality
    threshold   activation threshold: lam/beta (full) or alpha (main)
    throughput  effective secure throughput, bits/s/Hz
    mu_main     per-z_M-node power levels (main mode only)
    """

    mode: str
    policy: PowerPolicy
    lam: float
    threshold: float
    throughput: float
    mu_main: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)


def _check_grid(cfg: ChannelConfig, grid: StateGrid) -> None:
    if abs(grid.gamma - cfg.gamma) > 1e-12 * max(1.0, cfg.gamma):
        raise ValueError(f"grid was split along gamma={grid.gamma}, "
                         f"config has gamma={cfg.gamma}")
    if cfg.theta <= 0:
        raise ValueError("wiretap solvers require theta > 0; use the "
                         "ergodic oracle for theta = 0")


def _full_csi_mu(z_m: np.ndarray, z_e: np.ndarray, gamma: float, beta: float,
                 lam: float) -> np.ndarray:
    """Per-state optimal powers for given multiplier; zero below threshold."""
    diff = z_m - gamma * z_e
    active = diff > lam / beta
    mu = np.zeros(z_m.shape)
    if not active.any():
        return mu
    zm, ze, d = z_m[active], z_e[active], diff[active]

    def residual(m):
        a = 1.0 + m * zm
        b = 1.0 + gamma * m * ze
        return beta * (a / b) ** (-beta) * d / (a * b) - lam

    mu[active] = vector_bisect_decreasing(residual, zm.size, rtol=MU_RTOL,
                                          context="full-CSI state power")
    return mu


def full_csi_state_power(cfg: ChannelConfig, state: FadingState,
                         lam: float) -> float:
    """Optimal power at one fading state under full CSI."""
    if lam <= 0:
        raise ValueError(f"lam must be > 0, got {lam}")
    mu = _full_csi_mu(np.array([state.z_m]), np.array([state.z_e]),
                      cfg.gamma, cfg.beta, lam)
    return float(mu[0])


def solve_full_csi(cfg: ChannelConfig, grid: StateGrid) -> WiretapSolution:
    """Maximize effective secure throughput with full-CSI power control.

    The budget multiplier is bisected until the average power equals the
    SNR budget to BUDGET_RTOL; the throughput is the effective capacity of
    the induced secrecy-rate field (inactive and exposed states contribute
    their full probability mass at zero rate).
    """
    _check_grid(cfg, grid)
    beta = cfg.beta

    def budget(lam: float) -> float:
        mu = _full_csi_mu(grid.z_m, grid.z_e, cfg.gamma, beta, lam)
        return float(np.sum(grid.weight * mu))

    lam, power, iters = scalar_bisect_decreasing(
        budget, cfg.avg_snr, beta, rtol=BUDGET_RTOL,
        context="full-CSI budget multiplier")
    residual = abs(power - cfg.avg_snr) / cfg.avg_snr
    if residual > BUDGET_CHECK:
        raise SolverError(f"full-CSI budget missed: relative residual "
                          f"{residual:.3e} at lam={lam:.6e}")
    mu = _full_csi_mu(grid.z_m, grid.z_e, cfg.gamma, beta, lam)
    r1 = secrecy_rate_values(grid.z_m, grid.z_e, grid.secure, mu, cfg.gamma)
    throughput = effective_capacity(cfg, grid, r1)
    policy = PowerPolicy(np.zeros_like(mu), mu)
    return WiretapSolution(
        mode="full", policy=policy, lam=lam, threshold=lam / beta,
        throughput=throughput,
        diagnostics={"outer_iterations": iters, "budget_residual": residual,
                     "active_mass": float(np.sum(grid.weight[mu > 0]))})


def _inner_cells(grid: StateGrid, z_m_nodes: np.ndarray,
                 gamma: float) -> tuple[np.ndarray, np.ndarray]:
    """Padded eavesdropper-gain cells below z_M/gamma for each z_M node."""
    marg_e = grid.dist.marginal_e
    axis = _axis_e(grid)
    rows = [_cells_below(marg_e, axis, float(z) / gamma) for z in z_m_nodes]
    width = max((r[0].size for r in rows), default=0)
    nodes = np.zeros((len(rows), max(width, 1)))
    mass = np.zeros_like(nodes)
    for k, (nk, mk) in enumerate(rows):
        nodes[k, :nk.size] = nk
        mass[k, :mk.size] = mk
    return nodes, mass


def _main_mu(z_m: np.ndarray, ve: np.ndarray, we: np.ndarray, active: np.ndarray,
             gamma: float, beta: float, lam: float) -> np.ndarray:
    """Main-CSI powers on active z_M nodes via the averaged stationarity."""
    mu = np.zeros(z_m.shape)
    if not active.any():
        return mu
    zm = z_m[active, None]
    v, w = ve[active], we[active]
    d = zm - gamma * v

    def residual(m):
        m = m[:, None]
        den = 1.0 + gamma * m * v
        y = (1.0 + m * zm) / den
        return beta * np.sum(w * y ** (-beta - 1.0) * d / (den * den),
                             axis=1) - lam

    mu[active] = vector_bisect_decreasing(residual, int(active.sum()),
                                          rtol=MU_RTOL,
                                          context="main-CSI state power")
    return mu


def _main_threshold(dist: FadingDistribution, gamma: float, beta: float,
                    lam: float) -> float:
    """Activation gain alpha: positive power iff z_M > alpha.

    alpha solves the zero-power stationarity, a strictly increasing
    function of z_M built from the eavesdropper CDF and partial mean.
    """
    marg_e = dist.marginal_e

    def g0(z: float) -> float:
        u = z / gamma
        return z * float(marg_e.cdf(u)) - gamma * float(marg_e.partial_mean(u)) \
            - lam / beta

    hi = 1.0
    guard = 0
    while g0(hi) < 0:
        hi *= 2.0
        guard += 1
        if guard > 200:
            raise SolverError("main-CSI threshold bracket failed")
    return brentq(g0, 0.0, hi, xtol=1e-14, rtol=1e-14)


def main_csi_state_power(cfg: ChannelConfig, dist: FadingDistribution,
                         z_m: float, lam: float, n_inner: int = 400) -> float:
    """Optimal power at one legitimate-channel gain under main CSI.

    The stationarity condition averages over the eavesdropper gain below
    z_M/gamma; the average is evaluated on n_inner conditional cells.
    """
    if lam <= 0:
        raise ValueError(f"lam must be > 0, got {lam}")
    alpha = _main_threshold(dist, cfg.gamma, cfg.beta, lam)
    if z_m <= alpha:
        return 0.0
    axis = _axis_cells(dist.marginal_e, n_inner)
    nodes, mass = _cells_below(dist.marginal_e, axis, z_m / cfg.gamma)
    mu = _main_mu(np.array([z_m]), nodes[None, :], mass[None, :],
                  np.array([True]), cfg.gamma, cfg.beta, lam)
    return float(mu[0])


def solve_main_csi(cfg: ChannelConfig, grid: StateGrid,
                   dist: FadingDistribution | None = None) -> WiretapSolution:
    """Maximize effective secure throughput adapting to z_M only.

    Requires independent marginals: the averaged stationarity and the
    throughput assembly factor the joint law into the two marginals.
    """
    _check_grid(cfg, grid)
    if dist is None:
        dist = grid.dist
    if not dist.independent:
        raise ValueError("main-CSI power control requires independent "
                         "fading marginals")
    beta = cfg.beta
    zm_nodes = grid.nodes_m
    ve, we = _inner_cells(grid, zm_nodes, cfg.gamma)
    s_e = float(np.sum(grid.mass_e))
    s_m = float(np.sum(grid.mass_m))

    def solve_at(lam: float) -> tuple[np.ndarray, float]:
        alpha = _main_threshold(dist, cfg.gamma, beta, lam)
        active = zm_nodes > alpha
        mu = _main_mu(zm_nodes, ve, we, active, cfg.gamma, beta, lam)
        return mu, alpha

    def budget(lam: float) -> float:
        mu, _ = solve_at(lam)
        return float(np.sum(grid.mass_m * mu)) * s_e

    lam, power, iters = scalar_bisect_decreasing(
        budget, cfg.avg_snr, beta, rtol=BUDGET_RTOL,
        context="main-CSI budget multiplier")
    residual = abs(power - cfg.avg_snr) / cfg.avg_snr
    if residual > BUDGET_CHECK:
        raise SolverError(f"main-CSI budget missed: relative residual "
                          f"{residual:.3e} at lam={lam:.6e}")
    mu, alpha = solve_at(lam)

    # Throughput from the three-part decomposition on the same grid:
    # inactive z_M (zero rate, full eavesdropper mass), exposed remainder
    # above threshold, and the adapted term over the secure slices.
    den = 1.0 + cfg.gamma * mu[:, None] * ve
    y = (1.0 + mu[:, None] * zm_nodes[:, None]) / den
    below = np.sum(we, axis=1)
    term = np.where(mu > 0,
                    (s_e - below) + np.sum(we * y ** (-beta), axis=1),
                    s_e)
    log_mean = math.log(float(np.sum(grid.mass_m * term)) / (s_m * s_e))
    throughput = -log_mean / cfg.theta_tb

    mu_atoms = mu[grid.idx_m]
    policy = PowerPolicy(np.zeros_like(mu_atoms), mu_atoms)
    return WiretapSolution(
        mode="main", policy=policy, lam=lam, threshold=alpha,
        throughput=throughput, mu_main=mu,
        diagnostics={"outer_iterations": iters, "budget_residual": residual,
                     "active_mass": float(np.sum(grid.mass_m[mu > 0]) * s_e)})
