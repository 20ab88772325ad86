"""Effective capacity of a rate field and its ergodic limit.

Effective capacity is the largest constant arrival rate (bits/s/Hz here,
i.e. normalized by bandwidth) that the time-varying service can sustain
while the queue-length tail decays at least as fast as exp(-theta * q).
It is the negative log-moment functional of the per-block service rate and
collapses to the plain mean rate as theta -> 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .fading import ChannelConfig
from .quadrature import StateGrid


@dataclass(frozen=True)
class ThroughputPoint:
    """A (common, confidential) spectral-throughput pair in bits/s/Hz."""

    c0: float
    c1: float

    def __post_init__(self) -> None:
        if self.c0 < 0 or self.c1 < 0:
            raise ValueError(f"throughputs must be >= 0, got {self}")


@dataclass
class RateField:
    """Per-atom instantaneous rates (bits/s/Hz), tagged by message kind."""

    values: np.ndarray
    kind: str  # "common" | "confidential"

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.kind not in ("common", "confidential"):
            raise ValueError(f"unknown rate kind: {self.kind}")
        if np.any(self.values < 0):
            raise ValueError("rates must be >= 0")

    def validate_against(self, grid: StateGrid) -> None:
        if self.values.shape != grid.z_m.shape:
            raise ValueError("rate field does not match grid atoms")
        if self.kind == "confidential" and np.any(self.values[~grid.secure] != 0):
            raise ValueError("confidential rates must be 0 on exposed states")


def _values(rates) -> np.ndarray:
    return np.asarray(getattr(rates, "values", rates), dtype=float)


def effective_capacity(cfg: ChannelConfig, grid: StateGrid, rates) -> float:
    """-1/(theta*T*B) * ln E{exp(-theta*T*B*R)} in bits/s/Hz.

    The expectation is renormalized by the grid's total mass so truncation
    does not bias the value.  Computed through a max-shifted log-sum-exp;
    the raw exponents theta*T*B*R can exceed the floating-point range.
    Requires theta > 0: the theta = 0 limit is ergodic_limit, and this
    function refuses to guess which one was meant.
    """
    if cfg.theta <= 0:
        raise ValueError("effective_capacity requires theta > 0; "
                         "use ergodic_limit for the theta = 0 baseline")
    r = _values(rates)
    if np.isnan(r).any():
        raise ValueError("rate field contains NaN")
    tb = cfg.theta_tb
    log_mean = logsumexp(-tb * r, b=grid.weight) - np.log(grid.total_weight)
    return float(-log_mean / tb)


def ergodic_limit(grid: StateGrid, rates) -> float:
    """Mean rate E{R} in bits/s/Hz (theta -> 0 limit)."""
    r = _values(rates)
    if np.isnan(r).any():
        raise ValueError("rate field contains NaN")
    return float(np.sum(grid.weight * r) / grid.total_weight)
