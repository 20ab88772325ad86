"""Weighted-throughput power control for the broadcast channel with a
confidential message, and tracing of the throughput-region boundary.

For weights (lambda0, lambda1) on the common and confidential throughputs,
the stationarity system decouples per fading state once two normalizers
(phi0, phi1, the weighted-objective denominators) and the power price kappa
are frozen.  The solver iterates: inner bisection on kappa until the power
budget binds with equality, outer fixed-point iteration on (phi0, phi1).

Per-state branch structure on the secure region: confidential power is
active only where z_M - gamma*z_E exceeds alpha2; common power rides on
top where the overheard gain gamma*z_E exceeds alpha1 after the
confidential load, in which case the two stationarity equations reduce to
a single scalar condition in the confidential power.  Everywhere else the
common power has a waterfilling-style closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .effcap import ThroughputPoint, effective_capacity
from .fading import ChannelConfig
from .policy import PowerPolicy, rate_fields_from_policy
from .quadrature import StateGrid
from .roots import SolverError, scalar_bisect_decreasing, vector_bisect_decreasing

LN2 = math.log(2.0)

PHI_TOL = 1e-6
BUDGET_RTOL = 1e-5
MU_RTOL = 1e-10


@dataclass
class PCState:
    """Frozen scalars that decouple the per-state power problem.

    lambda0/lambda1 are the objective weights, kappa the power price, and
    phi0/phi1 the current normalizers (each in (0, 1]: they are averages
    of quantities bounded by 1).  alpha1/alpha2 are derived activation
    levels, recomputed on access so they can never go stale.
    """

    lambda0: float
    lambda1: float
    kappa: float
    phi0: float
    phi1: float

    def __post_init__(self) -> None:
        if self.lambda0 < 0 or self.lambda1 < 0 or self.lambda0 + self.lambda1 <= 0:
            raise ValueError("objective weights must be >= 0 and not both 0")
        if not self.kappa > 0:
            raise ValueError(f"kappa must be > 0, got {self.kappa}")
        for name, phi in (("phi0", self.phi0), ("phi1", self.phi1)):
            if not 0 < phi <= 1:
                raise ValueError(f"{name} must lie in (0, 1], got {phi}")

    @property
    def alpha1(self) -> float:
        if self.lambda0 == 0:
            return math.inf
        return self.kappa * self.phi0 * LN2 / self.lambda0

    @property
    def alpha2(self) -> float:
        if self.lambda1 == 0:
            return math.inf
        return self.kappa * self.phi1 * LN2 / self.lambda1


@dataclass
class BoundaryPoint:
    lambda0: float
    lambda1: float
    throughput: ThroughputPoint | None
    ok: bool
    error: str = ""
    diagnostics: dict = field(default_factory=dict)


@dataclass
class RegionBoundary:
    """Traced boundary of the effective secure throughput region."""

    points: list[BoundaryPoint]

    def valid_points(self) -> list[tuple[float, float]]:
        return [(p.throughput.c0, p.throughput.c1)
                for p in self.points if p.ok]

    @property
    def n_failed(self) -> int:
        return sum(not p.ok for p in self.points)


@dataclass
class ConvexityReport:
    max_violation: float
    n_points: int
    note: str = ""


def _common_closed(alpha1: float, gain: np.ndarray, beta: float) -> np.ndarray:
    """Waterfilling-style closed form [(g/alpha1)^(1/(beta+1)) - 1]/g, clipped."""
    mu = np.zeros_like(gain)
    if math.isinf(alpha1):
        return mu
    pos = gain > 0
    t = (gain[pos] / alpha1) ** (1.0 / (beta + 1.0))
    mu[pos] = np.maximum((t - 1.0) / gain[pos], 0.0)
    return mu


def _pc_powers(z_m: np.ndarray, z_e: np.ndarray, secure: np.ndarray,
               gamma: float, beta: float, pc: PCState
               ) -> tuple[np.ndarray, np.ndarray]:
    """Per-state optimal (mu0, mu1) for frozen (kappa, phi0, phi1)."""
    z_m = np.asarray(z_m, dtype=float)
    z_e = np.asarray(z_e, dtype=float)
    a1, a2 = pc.alpha1, pc.alpha2
    g_ze = gamma * z_e
    diff = z_m - g_ze
    mu0 = np.zeros_like(z_m)
    mu1 = np.zeros_like(z_m)

    exposed = ~secure
    mu0[exposed] = _common_closed(a1, z_m[exposed], beta)

    low = secure & (diff <= a2)
    mu0[low] = _common_closed(a1, g_ze[low], beta)

    act = secure & (diff > a2)
    if not act.any():
        return mu0, mu1
    zm_a, gze_a, d_a = z_m[act], g_ze[act], diff[act]

    def conf_resid(m):
        den = 1.0 + gze_a * m
        y = (1.0 + m * zm_a) / den
        return d_a / a2 * y ** (-beta - 1.0) / (den * den) - 1.0

    mu22 = vector_bisect_decreasing(conf_resid, zm_a.size, rtol=MU_RTOL,
                                    context="confidential-only stationarity")

    with np.errstate(divide="ignore"):
        bound = 1.0 / a1 - 1.0 / gze_a  # mu1 below this leaves room for mu0
    keep_zero = (mu22 > bound) | (gze_a < a1)

    mu1_act = mu22.copy()
    mu0_act = np.zeros_like(mu22)

    joint = ~keep_zero
    if joint.any():
        zm_j, gze_j, d_j = zm_a[joint], gze_a[joint], d_a[joint]
        hi = mu22[joint]

        def joint_resid(m):
            den = 1.0 + gze_j * m
            y = (1.0 + m * zm_j) / den
            return (d_j / a2 * y ** (-beta - 1.0) / (den * den)
                    - (gze_j / (a1 * den)) ** (1.0 / (beta + 1.0)))

        r0 = joint_resid(np.zeros_like(hi))
        r_hi = joint_resid(hi)
        solvable = (r0 > 0) & (r_hi <= 0)   # no sign change: no positive root
        if solvable.any():
            lo_s = np.zeros(int(solvable.sum()))
            hi_s = hi[solvable]
            zm_s, gze_s, d_s = zm_j[solvable], gze_j[solvable], d_j[solvable]

            def bracket_resid(m):
                den = 1.0 + gze_s * m
                y = (1.0 + m * zm_s) / den
                return (d_s / a2 * y ** (-beta - 1.0) / (den * den)
                        - (gze_s / (a1 * den)) ** (1.0 / (beta + 1.0)))

            root = _bisect_in_bracket(bracket_resid, lo_s, hi_s)
            a_term = gze_s / (1.0 + gze_s * root)
            x = (a_term / a1) ** (1.0 / (beta + 1.0))
            mu0_joint = np.maximum((x - 1.0) / a_term, 0.0)
            tmp1 = mu1_act[joint]
            tmp0 = mu0_act[joint]
            tmp1[solvable] = root
            tmp0[solvable] = mu0_joint
            mu1_act[joint] = tmp1
            mu0_act[joint] = tmp0
        # Unsolvable joint states fall back to common power alone.
        fallback = joint.copy()
        fallback[joint] = ~solvable
        if fallback.any():
            mu1_act[fallback] = 0.0
            mu0_act[fallback] = _common_closed(a1, gze_a[fallback], beta)

    mu0[act] = mu0_act
    mu1[act] = mu1_act
    return mu0, mu1


def _bisect_in_bracket(residual, lo, hi, rtol=MU_RTOL, maxiter=200):
    """Bisection on per-element brackets with residual(lo) > 0 >= residual(hi)."""
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        pos = residual(mid) > 0
        lo = np.where(pos, mid, lo)
        hi = np.where(pos, hi, mid)
        if np.all(hi - lo <= rtol * np.maximum(hi, 1e-30)):
            break
    return 0.5 * (lo + hi)


def state_power_pc(cfg: ChannelConfig, state, pc: PCState
                   ) -> tuple[float, float]:
    """Optimal (mu0, mu1) at one fading state for frozen solver scalars."""
    z_m = np.array([state.z_m])
    z_e = np.array([state.z_e])
    secure = z_m > cfg.gamma * z_e
    mu0, mu1 = _pc_powers(z_m, z_e, secure, cfg.gamma, cfg.beta, pc)
    return float(mu0[0]), float(mu1[0])


def _phis(z_m, z_e, secure, weight, gamma, beta, mu0, mu1
          ) -> tuple[float, float]:
    g_ze = gamma * z_e
    den = 1.0 + g_ze * mu1
    x = np.where(secure, 1.0 + g_ze * mu0 / den, 1.0 + mu0 * z_m)
    phi0 = float(np.sum(weight * x ** (-beta)))
    y = (1.0 + mu1 * z_m) / den
    phi1 = float(np.sum(weight * np.where(secure, y ** (-beta), 1.0)))
    return phi0, phi1


def solve_pc(cfg: ChannelConfig, grid: StateGrid, lambda0: float,
             lambda1: float, *, warm: tuple[float, float, float] | None = None,
             phi_tol: float = PHI_TOL, budget_rtol: float = BUDGET_RTOL,
             max_outer: int = 100, damp_after: int = 20
             ) -> tuple[PowerPolicy, ThroughputPoint]:
    """Solve the weighted-throughput power control at weights (lambda0, lambda1).

    Weights are normalized to sum to one (the optimizer is scale
    invariant).  Fixed point: inside each iteration kappa is bisected until
    the average power equals the SNR budget, then the normalizers are
    re-evaluated under the resulting policy; convergence when they move by
    less than phi_tol, with 0.5-damping engaged after damp_after plain
    substitutions.  Returns the policy (carrying the converged PCState and
    diagnostics) and the achieved (common, confidential) throughput pair.
    """
    if lambda0 < 0 or lambda1 < 0 or lambda0 + lambda1 <= 0:
        raise ValueError("weights must be >= 0 and not both 0")
    if cfg.theta <= 0:
        raise ValueError("solve_pc requires theta > 0")
    if abs(grid.gamma - cfg.gamma) > 1e-12 * max(1.0, cfg.gamma):
        raise ValueError(f"grid was split along gamma={grid.gamma}, "
                         f"config has gamma={cfg.gamma}")
    s = lambda0 + lambda1
    lambda0, lambda1 = lambda0 / s, lambda1 / s
    beta = cfg.beta
    snr = cfg.avg_snr
    z_m, z_e, secure, weight = grid.z_m, grid.z_e, grid.secure, grid.weight

    if warm is not None:
        phi0, phi1, kappa = warm
    else:
        phi0 = phi1 = 1.0
        kappa = max(lambda0, lambda1) / ((1.0 + snr) * LN2)

    kappa_iters = 0
    delta = math.inf
    for outer in range(max_outer):
        def total(k: float) -> float:
            pc_k = PCState(lambda0, lambda1, k, phi0, phi1)
            mu0_k, mu1_k = _pc_powers(z_m, z_e, secure, cfg.gamma, beta, pc_k)
            return float(np.sum(weight * (mu0_k + mu1_k)))

        kappa, power, it = scalar_bisect_decreasing(
            total, snr, kappa, rtol=budget_rtol, context="power price kappa")
        kappa_iters += it
        pc = PCState(lambda0, lambda1, kappa, phi0, phi1)
        mu0, mu1 = _pc_powers(z_m, z_e, secure, cfg.gamma, beta, pc)
        phi0_new, phi1_new = _phis(z_m, z_e, secure, weight, cfg.gamma, beta,
                                   mu0, mu1)
        delta = max(abs(phi0_new - phi0), abs(phi1_new - phi1))
        if delta < phi_tol:
            break
        if outer >= damp_after:
            phi0 = 0.5 * (phi0 + phi0_new)
            phi1 = 0.5 * (phi1 + phi1_new)
        else:
            phi0, phi1 = phi0_new, phi1_new
    else:
        raise SolverError(
            f"normalizer fixed point did not converge in {max_outer} "
            f"iterations at weights ({lambda0:.4f}, {lambda1:.4f}): "
            f"last iterates phi0={phi0:.8f}, phi1={phi1:.8f}, "
            f"delta={delta:.2e}")

    budget_residual = abs(float(np.sum(weight * (mu0 + mu1))) - snr) / snr
    policy = PowerPolicy(mu0, mu1, pc=pc, diagnostics={
        "outer_iterations": outer + 1,
        "kappa_iterations": kappa_iters,
        "phi_delta": delta,
        "budget_residual": budget_residual,
        "phi_next": (phi0_new, phi1_new),
    })
    r0, r1 = rate_fields_from_policy(cfg, grid, policy)
    point = ThroughputPoint(_nonneg(effective_capacity(cfg, grid, r0)),
                            _nonneg(effective_capacity(cfg, grid, r1)))
    return policy, point


def _nonneg(x: float) -> float:
    if x < 0:
        if x < -1e-9:
            raise SolverError(f"throughput came out negative: {x}")
        return 0.0
    return x


def trace_region(cfg: ChannelConfig, grid: StateGrid,
                 n_points: int) -> RegionBoundary:
    """Sweep the weight simplex and record the boundary points.

    Failing weights are marked and the sweep continues; consecutive points
    warm-start each other.
    """
    if n_points < 3:
        raise ValueError(f"n_points must be >= 3, got {n_points}")
    points: list[BoundaryPoint] = []
    warm = None
    for lam0 in np.linspace(0.0, 1.0, n_points):
        lam0 = float(lam0)
        lam1 = 1.0 - lam0
        try:
            policy, tp = solve_pc(cfg, grid, lam0, lam1, warm=warm)
            warm = (policy.pc.phi0, policy.pc.phi1, policy.pc.kappa)
            points.append(BoundaryPoint(lam0, lam1, tp, True,
                                        diagnostics=policy.diagnostics))
        except SolverError as err:
            warm = None
            points.append(BoundaryPoint(lam0, lam1, None, False, str(err)))
    return RegionBoundary(points)


def check_convexity(boundary) -> ConvexityReport:
    """Audit that traced boundary points outline a convex region.

    Every midpoint of a pair of boundary points must be weakly dominated
    by the piecewise-linear upper boundary; the report carries the largest
    signed violation (negative means strictly inside).
    """
    pts = _as_points(boundary)
    if len(pts) < 3:
        return ConvexityReport(0.0, len(pts),
                               "insufficient points for a convexity audit")
    arr = np.asarray(pts, dtype=float)
    order = np.argsort(arr[:, 0])
    arr = arr[order]
    # Collapse duplicate abscissae onto the highest boundary value.
    xs, idx = np.unique(arr[:, 0], return_inverse=True)
    ys = np.full(xs.shape, -np.inf)
    np.maximum.at(ys, idx, arr[:, 1])

    n = arr.shape[0]
    ii, jj = np.triu_indices(n, k=1)
    mid_x = 0.5 * (arr[ii, 0] + arr[jj, 0])
    mid_y = 0.5 * (arr[ii, 1] + arr[jj, 1])
    upper = np.interp(mid_x, xs, ys)
    max_violation = float(np.max(mid_y - upper))
    return ConvexityReport(max_violation, len(pts))


def _as_points(boundary) -> list[tuple[float, float]]:
    if isinstance(boundary, RegionBoundary):
        return boundary.valid_points()
    pts = []
    for item in boundary:
        if isinstance(item, ThroughputPoint):
            pts.append((item.c0, item.c1))
        else:
            c0, c1 = item
            pts.append((float(c0), float(c1)))
    return pts
