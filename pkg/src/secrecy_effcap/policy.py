"""Power-allocation policies over a state grid."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .effcap import RateField
from .fading import ChannelConfig, common_rate_values, secrecy_rate_values
from .quadrature import StateGrid


@dataclass
class PowerPolicy:
    """Per-atom power levels for the common (mu0) and confidential (mu1)
    messages, normalized to the noise power at the legitimate receiver.

    `pc` and `diagnostics` carry solver state when the policy came out of
    an optimizer; they are not part of the allocation itself.
    """

    mu0: np.ndarray
    mu1: np.ndarray
    pc: Any = None
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.mu0 = np.asarray(self.mu0, dtype=float)
        self.mu1 = np.asarray(self.mu1, dtype=float)
        if self.mu0.shape != self.mu1.shape:
            raise ValueError("mu0 and mu1 must have matching shapes")
        if np.any(self.mu0 < 0) or np.any(self.mu1 < 0):
            raise ValueError("power levels must be >= 0")

    def validate_against(self, grid: StateGrid) -> None:
        """Check the broadcast-policy contract: no confidential power on
        exposed states and total power within the grid's mass."""
        if self.mu0.shape != grid.z_m.shape:
            raise ValueError("policy does not match grid atoms")
        if np.any(self.mu1[~grid.secure] != 0):
            raise ValueError("mu1 must be exactly 0 on exposed states")

    def total_power(self, grid: StateGrid) -> float:
        return float(np.sum(grid.weight * (self.mu0 + self.mu1)))


def rate_fields_from_policy(cfg: ChannelConfig, grid: StateGrid,
                            policy: PowerPolicy) -> tuple[RateField, RateField]:
    """Instantaneous (common, confidential) rates induced by a policy."""
    r0 = common_rate_values(grid.z_m, grid.z_e, grid.secure,
                            policy.mu0, policy.mu1, cfg.gamma)
    r1 = secrecy_rate_values(grid.z_m, grid.z_e, grid.secure,
                             policy.mu1, cfg.gamma)
    return RateField(r0, "common"), RateField(r1, "confidential")
