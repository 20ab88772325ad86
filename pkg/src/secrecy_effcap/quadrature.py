"""Discretization of the two-dimensional channel-state space.

The grid partitions each marginal into probability cells (equal-mass cells
for continuous marginals, which for exponential gains stretches the cell
edges logarithmically into the tail) and represents each product cell by
its conditional-mean node and exact probability mass.  Product cells cut
by the region boundary z_M = gamma * z_E are split into a secure and an
exposed atom so that integrands with a kink along the boundary are
integrated without smearing across it.  Conditional-mean nodes make the
grid exact for integrands that are affine on each atom; in particular
marginal means and region probabilities are recovered up to truncation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .fading import Exponential, FadingDistribution, FiniteDiscrete

# Per-marginal truncated tail mass.  Two marginals together leave the total
# grid mass within 1e-6 of unity.
TAIL_MASS = 5e-7

# Fixed-order Gauss-Legendre rule for the sub-cell boundary integrals.
_GL_X, _GL_W = np.polynomial.legendre.leggauss(24)

Marginal = Exponential | FiniteDiscrete


@dataclass
class AxisCells:
    """One marginal discretized into cells (edges are None for discrete)."""

    nodes: np.ndarray
    mass: np.ndarray
    edges: np.ndarray | None


@dataclass
class StateGrid:
    """Discretized joint channel-state space with kink-aware atoms.

    nodes_m/nodes_e and mass_m/mass_e describe the marginal cells; the
    flat atom arrays (z_m, z_e, weight, secure) are the evaluation view
    used by every solver.  idx_m/idx_e map each atom back to its marginal
    cell.  `gamma` records the region boundary the atoms were split along.
    """

    dist: FadingDistribution
    gamma: float
    nodes_m: np.ndarray
    mass_m: np.ndarray
    edges_m: np.ndarray | None
    nodes_e: np.ndarray
    mass_e: np.ndarray
    edges_e: np.ndarray | None
    z_m: np.ndarray
    z_e: np.ndarray
    weight: np.ndarray
    secure: np.ndarray
    idx_m: np.ndarray
    idx_e: np.ndarray

    @property
    def n_atoms(self) -> int:
        return self.z_m.size

    @property
    def total_weight(self) -> float:
        return float(np.sum(self.weight))

    def weight_ij(self, i: int, j: int) -> float:
        """Probability mass of product cell (i, j)."""
        return float(self.mass_m[i] * self.mass_e[j])

    def expect_values(self, values: np.ndarray) -> float:
        """Weighted sum of per-atom values (raw, not renormalized)."""
        values = np.asarray(values, dtype=float)
        if np.isnan(values).any():
            raise ValueError("expectation over NaN values")
        return float(np.sum(self.weight * values))

    def __repr__(self) -> str:
        return (f"StateGrid({self.nodes_m.size}x{self.nodes_e.size} cells, "
                f"{self.n_atoms} atoms, gamma={self.gamma})")


def _axis_cells(marginal: Marginal, n: int) -> AxisCells:
    if isinstance(marginal, FiniteDiscrete):
        return AxisCells(nodes=marginal.points.copy(),
                         mass=marginal.probs.copy(), edges=None)
    if isinstance(marginal, Exponential):
        probs = np.linspace(0.0, 1.0 - TAIL_MASS, n + 1)
        edges = marginal.quantile(probs)
        edges[0] = 0.0
        mass = np.diff(probs)
        pm = marginal.partial_mean(edges)
        nodes = np.diff(pm) / mass
        return AxisCells(nodes=nodes, mass=mass, edges=edges)
    raise TypeError(f"unsupported marginal kind: {type(marginal).__name__}")


def _cells_below(marginal: Marginal, axis: AxisCells,
                 upper: float) -> tuple[np.ndarray, np.ndarray]:
    """Cells of one marginal restricted to [0, upper], boundary cell split."""
    if upper <= 0:
        return np.empty(0), np.empty(0)
    if axis.edges is None:
        keep = marginal.points <= upper
        return marginal.points[keep], marginal.probs[keep]
    edges = axis.edges
    if upper >= edges[-1]:
        return axis.nodes, axis.mass
    k = int(np.searchsorted(edges, upper, side="right")) - 1
    nodes = axis.nodes[:k]
    mass = axis.mass[:k]
    part_mass = float(marginal.cdf(upper) - marginal.cdf(edges[k]))
    if part_mass > 1e-16:
        node = float(marginal.partial_mean(upper)
                     - marginal.partial_mean(edges[k])) / part_mass
        nodes = np.append(nodes, node)
        mass = np.append(mass, part_mass)
    return nodes, mass


def _split_cont_cont(marg_m: Exponential, marg_e: Exponential,
                     a_m, b_m, a_e, b_e, gamma: float):
    """Mass and moments of the two parts of straddling rectangles.

    For each rectangle [a_m,b_m]x[a_e,b_e] crossed by z_M = gamma*z_E,
    integrates over z_E slices: slices lying wholly on one side contribute
    the full z_M range in closed form via the CDFs, and the band of cut
    slices is smooth and handled by Gauss-Legendre.  Both parts are
    integrated directly (never by subtraction) so that conditional-mean
    nodes of thin slivers stay on the correct side of the boundary.
    Returns (mass, moment_m, moment_e) for the secure and exposed parts.
    """
    f_m_a, f_m_b = marg_m.cdf(a_m), marg_m.cdf(b_m)
    pm_m_a, pm_m_b = marg_m.partial_mean(a_m), marg_m.partial_mean(b_m)
    v2 = np.clip(b_m / gamma, a_e, b_e)
    v1 = np.clip(a_m / gamma, a_e, v2)
    dm = f_m_b - f_m_a
    dpm = pm_m_b - pm_m_a

    # Whole slices: secure for z_E in [a_e, v1], exposed for z_E in [v2, b_e].
    de_lo = marg_e.cdf(v1) - marg_e.cdf(a_e)
    dpe_lo = marg_e.partial_mean(v1) - marg_e.partial_mean(a_e)
    de_hi = marg_e.cdf(b_e) - marg_e.cdf(v2)
    dpe_hi = marg_e.partial_mean(b_e) - marg_e.partial_mean(v2)
    sec = [dm * de_lo, dpm * de_lo, dm * dpe_lo]
    exp_ = [dm * de_hi, dpm * de_hi, dm * dpe_hi]

    # Cut slices: z_E in [v1, v2], z_M split at gamma*z_E.
    half = 0.5 * (v2 - v1)
    mid = 0.5 * (v2 + v1)
    v = mid[:, None] + half[:, None] * _GL_X[None, :]
    wq = half[:, None] * _GL_W[None, :] * marg_e.pdf(v)
    f_cut = marg_m.cdf(gamma * v)
    pm_cut = marg_m.partial_mean(gamma * v)
    sec[0] = sec[0] + np.sum(wq * (f_m_b[:, None] - f_cut), axis=1)
    sec[1] = sec[1] + np.sum(wq * (pm_m_b[:, None] - pm_cut), axis=1)
    sec[2] = sec[2] + np.sum(wq * v * (f_m_b[:, None] - f_cut), axis=1)
    exp_[0] = exp_[0] + np.sum(wq * (f_cut - f_m_a[:, None]), axis=1)
    exp_[1] = exp_[1] + np.sum(wq * (pm_cut - pm_m_a[:, None]), axis=1)
    exp_[2] = exp_[2] + np.sum(wq * v * (f_cut - f_m_a[:, None]), axis=1)
    return tuple(sec), tuple(exp_)


class _AtomBag:
    def __init__(self):
        self.z_m, self.z_e, self.w = [], [], []
        self.secure, self.idx_m, self.idx_e = [], [], []

    def add(self, z_m, z_e, w, secure, idx_m, idx_e):
        z_m, z_e, w, sec, i_m, i_e = np.broadcast_arrays(
            np.atleast_1d(np.asarray(z_m, dtype=float)),
            np.atleast_1d(np.asarray(z_e, dtype=float)),
            np.atleast_1d(np.asarray(w, dtype=float)),
            np.atleast_1d(secure),
            np.atleast_1d(idx_m), np.atleast_1d(idx_e))
        keep = w > 1e-16
        self.z_m.append(z_m[keep])
        self.z_e.append(z_e[keep])
        self.w.append(w[keep])
        self.secure.append(sec[keep])
        self.idx_m.append(i_m[keep])
        self.idx_e.append(i_e[keep])

    def arrays(self):
        return (np.concatenate(self.z_m), np.concatenate(self.z_e),
                np.concatenate(self.w), np.concatenate(self.secure).astype(bool),
                np.concatenate(self.idx_m).astype(np.intp),
                np.concatenate(self.idx_e).astype(np.intp))


def _atoms_cont_cont(marg_m, marg_e, ax_m, ax_e, gamma):
    n_m, n_e = ax_m.nodes.size, ax_e.nodes.size
    a_m, b_m = ax_m.edges[:-1], ax_m.edges[1:]
    a_e, b_e = ax_e.edges[:-1], ax_e.edges[1:]
    ii, jj = np.meshgrid(np.arange(n_m), np.arange(n_e), indexing="ij")
    ii, jj = ii.ravel(), jj.ravel()
    am, bm = a_m[ii], b_m[ii]
    ae, be = a_e[jj], b_e[jj]
    cell_w = np.outer(ax_m.mass, ax_e.mass).ravel()

    full_secure = am >= gamma * be
    full_exposed = bm <= gamma * ae
    straddle = ~(full_secure | full_exposed)

    bag = _AtomBag()
    for mask, sec in ((full_secure, True), (full_exposed, False)):
        bag.add(ax_m.nodes[ii[mask]], ax_e.nodes[jj[mask]], cell_w[mask],
                sec, ii[mask], jj[mask])

    if straddle.any():
        s = straddle
        part_sec, part_exp = _split_cont_cont(
            marg_m, marg_e, am[s], bm[s], ae[s], be[s], gamma)
        with np.errstate(divide="ignore", invalid="ignore"):
            for (w, mm, me), sec in ((part_sec, True), (part_exp, False)):
                bag.add(mm / w, me / w, w, sec, ii[s], jj[s])
    return bag


def _atoms_cont_disc(marg_m, ax_m, ax_e, gamma):
    # Continuous z_M axis, discrete z_E points: split z_M cells at gamma*z_E.
    bag = _AtomBag()
    a, b = ax_m.edges[:-1], ax_m.edges[1:]
    n_m = ax_m.nodes.size
    idx = np.arange(n_m)
    for j, (v, pv) in enumerate(zip(ax_e.nodes, ax_e.mass)):
        t = gamma * v
        exposed = b <= t
        secure = a >= t
        bag.add(ax_m.nodes[exposed], v, ax_m.mass[exposed] * pv, False,
                idx[exposed], j)
        bag.add(ax_m.nodes[secure], v, ax_m.mass[secure] * pv, True,
                idx[secure], j)
        cut = ~(exposed | secure)
        for k in idx[cut]:
            m_lo = float(marg_m.cdf(t) - marg_m.cdf(a[k]))
            m_hi = float(ax_m.mass[k] - m_lo)
            pm_lo = float(marg_m.partial_mean(t) - marg_m.partial_mean(a[k]))
            pm_hi = float(ax_m.mass[k] * ax_m.nodes[k] - pm_lo)
            if m_lo > 1e-16:
                bag.add(pm_lo / m_lo, v, m_lo * pv, False, k, j)
            if m_hi > 1e-16:
                bag.add(pm_hi / m_hi, v, m_hi * pv, True, k, j)
    return bag


def _atoms_disc_cont(marg_e, ax_m, ax_e, gamma):
    # Discrete z_M points, continuous z_E axis: split z_E cells at z_M/gamma.
    bag = _AtomBag()
    a, b = ax_e.edges[:-1], ax_e.edges[1:]
    n_e = ax_e.nodes.size
    idx = np.arange(n_e)
    for i, (u, pu) in enumerate(zip(ax_m.nodes, ax_m.mass)):
        s = u / gamma
        secure = b <= s
        exposed = a >= s
        bag.add(u, ax_e.nodes[secure], ax_e.mass[secure] * pu, True,
                i, idx[secure])
        bag.add(u, ax_e.nodes[exposed], ax_e.mass[exposed] * pu, False,
                i, idx[exposed])
        cut = ~(secure | exposed)
        for k in idx[cut]:
            m_lo = float(marg_e.cdf(s) - marg_e.cdf(a[k]))
            m_hi = float(ax_e.mass[k] - m_lo)
            pm_lo = float(marg_e.partial_mean(s) - marg_e.partial_mean(a[k]))
            pm_hi = float(ax_e.mass[k] * ax_e.nodes[k] - pm_lo)
            if m_lo > 1e-16:
                bag.add(u, pm_lo / m_lo, m_lo * pu, True, i, k)
            if m_hi > 1e-16:
                bag.add(u, pm_hi / m_hi, m_hi * pu, False, i, k)
    return bag


def _atoms_disc_disc(ax_m, ax_e, gamma):
    bag = _AtomBag()
    ii, jj = np.meshgrid(np.arange(ax_m.nodes.size),
                         np.arange(ax_e.nodes.size), indexing="ij")
    ii, jj = ii.ravel(), jj.ravel()
    zm, ze = ax_m.nodes[ii], ax_e.nodes[jj]
    w = np.outer(ax_m.mass, ax_e.mass).ravel()
    sec = zm > gamma * ze
    bag.add(zm[sec], ze[sec], w[sec], True, ii[sec], jj[sec])
    bag.add(zm[~sec], ze[~sec], w[~sec], False, ii[~sec], jj[~sec])
    return bag


def build_grid(dist: FadingDistribution, n_per_axis: int,
               gamma: float = 1.0) -> StateGrid:
    """Discretize the joint fading law into a kink-aware StateGrid.

    n_per_axis applies to continuous marginals only; discrete marginals use
    their exact support points.  `gamma` fixes the region boundary along
    which straddling cells are split; solvers must be run with a matching
    channel gamma.
    """
    if not gamma > 0:
        raise ValueError(f"gamma must be > 0, got {gamma}")
    m, e = dist.marginal_m, dist.marginal_e
    if (not isinstance(m, FiniteDiscrete) or not isinstance(e, FiniteDiscrete)) \
            and n_per_axis < 8:
        raise ValueError(f"n_per_axis must be >= 8, got {n_per_axis}")
    ax_m = _axis_cells(m, n_per_axis)
    ax_e = _axis_cells(e, n_per_axis)

    m_disc, e_disc = isinstance(m, FiniteDiscrete), isinstance(e, FiniteDiscrete)
    if not m_disc and not e_disc:
        bag = _atoms_cont_cont(m, e, ax_m, ax_e, gamma)
    elif not m_disc and e_disc:
        bag = _atoms_cont_disc(m, ax_m, ax_e, gamma)
    elif m_disc and not e_disc:
        bag = _atoms_disc_cont(e, ax_m, ax_e, gamma)
    else:
        bag = _atoms_disc_disc(ax_m, ax_e, gamma)

    z_m, z_e, w, secure, idx_m, idx_e = bag.arrays()
    # Atoms must classify consistently with their region tag.  Roundoff can
    # leave negligible-mass slivers marginally on the wrong side; those are
    # snapped to the boundary.  Anything heavier is a construction bug.
    wrong = secure != (z_m > gamma * z_e)
    if wrong.any():
        if float(np.sum(w[wrong])) > 1e-9:
            raise AssertionError("grid atoms landed on the wrong side of "
                                 "the region boundary")
        snap_sec = wrong & secure
        snap_exp = wrong & ~secure
        z_m[snap_sec] = gamma * z_e[snap_sec] * (1.0 + 1e-12) + 1e-300
        z_m[snap_exp] = gamma * z_e[snap_exp]
    return StateGrid(dist=dist, gamma=float(gamma),
                     nodes_m=ax_m.nodes, mass_m=ax_m.mass, edges_m=ax_m.edges,
                     nodes_e=ax_e.nodes, mass_e=ax_e.mass, edges_e=ax_e.edges,
                     z_m=z_m, z_e=z_e, weight=w, secure=secure,
                     idx_m=idx_m, idx_e=idx_e)


def expect(grid: StateGrid, f: Callable) -> float:
    """Expectation of f(z_M, z_E) under the grid.

    f must accept the atom arrays (vectorized) and return finite values;
    NaN raises instead of propagating silently.  Summation is numpy's
    pairwise reduction, so results are bit-stable across runs.
    """
    values = np.asarray(f(grid.z_m, grid.z_e), dtype=float)
    if values.ndim == 0:
        values = np.full(grid.z_m.shape, float(values))
    return grid.expect_values(values)


def expect_conditional_e(grid: StateGrid, f: Callable, upper: float) -> float:
    """One-dimensional integral of f(z_E) * p(z_E) over [0, upper].

    Uses the grid's z_E marginal cells, splitting the cell containing
    `upper` so the cut is exact.  upper may be inf.
    """
    if upper < 0:
        raise ValueError(f"upper must be >= 0, got {upper}")
    nodes, mass = _cells_below(grid.dist.marginal_e, _axis_e(grid), upper)
    if nodes.size == 0:
        return 0.0
    values = np.asarray(f(nodes), dtype=float)
    if values.ndim == 0:
        values = np.full(nodes.shape, float(values))
    if np.isnan(values).any():
        raise ValueError("integrand returned NaN")
    return float(np.sum(mass * values))


def _axis_e(grid: StateGrid) -> AxisCells:
    return AxisCells(nodes=grid.nodes_e, mass=grid.mass_e, edges=grid.edges_e)


def _axis_m(grid: StateGrid) -> AxisCells:
    return AxisCells(nodes=grid.nodes_m, mass=grid.mass_m, edges=grid.edges_m)
