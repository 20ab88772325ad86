"""Block-fading channel model for a two-receiver secure broadcast link.

One transmitter serves a legitimate receiver (channel power gain z_M) while
a second receiver (gain z_E) may overhear.  Power levels are normalized by
the noise power at the legitimate receiver, so they are transmit-SNR values;
rates are spectral (bits/s/Hz).  A fading state supports a positive secrecy
rate only when z_M > gamma * z_E, where gamma is the noise-power ratio of
the two receivers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

LN2 = math.log(2.0)


class SecrecyRegion(Enum):
    """Region membership of a fading state.

    SECURE:  z_M > gamma * z_E; confidential transmission is possible.
    EXPOSED: z_M <= gamma * z_E; the overhearing receiver is at least as
             strong and confidential power must be zero.  The boundary
             z_M == gamma * z_E belongs to EXPOSED.
    """

    SECURE = "secure"
    EXPOSED = "exposed"


@dataclass(frozen=True)
class ChannelConfig:
    """Physical and QoS parameters of the link.

    gamma         noise-power ratio between receiver 1 and receiver 2 (> 0)
    avg_snr       average transmit SNR budget, linear scale (> 0)
    theta         queue-tail decay exponent, 1/bits (> 0; exactly 0 is
                  allowed as a marker for the ergodic, no-queue limit)
    frame_s       fading-block duration T in seconds
    bandwidth_hz  system bandwidth B in Hz
    """

    gamma: float = 1.0
    avg_snr: float = 1.0
    theta: float = 0.01
    frame_s: float = 2e-3
    bandwidth_hz: float = 1e5

    def __post_init__(self) -> None:
        if not self.gamma > 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        if not self.avg_snr > 0:
            raise ValueError(f"avg_snr must be > 0, got {self.avg_snr}")
        if self.theta < 0:
            raise ValueError(f"theta must be >= 0, got {self.theta}")
        if not self.frame_s > 0 or not self.bandwidth_hz > 0:
            raise ValueError("frame_s and bandwidth_hz must be > 0")

    @property
    def beta(self) -> float:
        """Dimensionless QoS constant theta*T*B/ln2, always recomputed."""
        return self.theta * self.frame_s * self.bandwidth_hz / LN2

    @property
    def theta_tb(self) -> float:
        """Exponent scale theta*T*B (1/(bits/s/Hz)); equals beta*ln2."""
        return self.theta * self.frame_s * self.bandwidth_hz

    @classmethod
    def from_db(cls, snr_db: float, **kwargs) -> "ChannelConfig":
        """Build a config from an average SNR given in dB."""
        return cls(avg_snr=10.0 ** (snr_db / 10.0), **kwargs)

    @classmethod
    def with_beta(cls, beta: float, *, frame_s: float = 2e-3,
                  bandwidth_hz: float = 1e5, **kwargs) -> "ChannelConfig":
        """Build a config whose derived beta equals the given value."""
        theta = beta * LN2 / (frame_s * bandwidth_hz)
        return cls(theta=theta, frame_s=frame_s, bandwidth_hz=bandwidth_hz,
                   **kwargs)


@dataclass(frozen=True)
class FadingState:
    """A channel-gain pair (z_m for the legitimate link, z_e overheard)."""

    z_m: float
    z_e: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "z_m", float(self.z_m))
        object.__setattr__(self, "z_e", float(self.z_e))
        if self.z_m < 0 or self.z_e < 0:
            raise ValueError(f"gains must be >= 0, got ({self.z_m}, {self.z_e})")


def classify(state: FadingState, gamma: float) -> SecrecyRegion:
    """Region of a fading state; ties z_m == gamma*z_e go to EXPOSED."""
    if state.z_m > gamma * state.z_e:
        return SecrecyRegion.SECURE
    return SecrecyRegion.EXPOSED


def secure_mask(z_m: np.ndarray, z_e: np.ndarray, gamma: float) -> np.ndarray:
    """Vectorized region test: True where z_m > gamma*z_e."""
    return np.asarray(z_m) > gamma * np.asarray(z_e)


def common_rate(cfg: ChannelConfig, state: FadingState,
                mu0: float, mu1: float) -> float:
    """Instantaneous common-message rate in bits/s/Hz.

    In the SECURE region the common message must be decodable by the weaker
    receiver on top of the confidential signal (power mu1), which acts as
    interference; in EXPOSED the legitimate channel is the bottleneck.
    mu1 > 0 in EXPOSED is a contract violation: no confidential power may
    be spent there.
    """
    if mu0 < 0 or mu1 < 0:
        raise ValueError(f"power levels must be >= 0, got ({mu0}, {mu1})")
    region = classify(state, cfg.gamma)
    if region is SecrecyRegion.EXPOSED:
        if mu1 > 0:
            raise ValueError(
                "confidential power must be 0 in the exposed region, "
                f"got mu1={mu1} at state ({state.z_m}, {state.z_e})")
        return math.log2(1.0 + mu0 * state.z_m)
    g_ze = cfg.gamma * state.z_e
    return math.log2(1.0 + g_ze * mu0 / (1.0 + g_ze * mu1))


def secrecy_rate(cfg: ChannelConfig, state: FadingState, mu1: float) -> float:
    """Instantaneous confidential-message rate in bits/s/Hz.

    Zero in the EXPOSED region regardless of mu1.
    """
    if mu1 < 0:
        raise ValueError(f"power level must be >= 0, got {mu1}")
    if classify(state, cfg.gamma) is SecrecyRegion.EXPOSED:
        return 0.0
    return (math.log2(1.0 + mu1 * state.z_m)
            - math.log2(1.0 + cfg.gamma * mu1 * state.z_e))


def common_rate_values(z_m: np.ndarray, z_e: np.ndarray, secure: np.ndarray,
                       mu0: np.ndarray, mu1: np.ndarray,
                       gamma: float) -> np.ndarray:
    """Vectorized common-message rates over tagged states."""
    g_ze = gamma * z_e
    inner = np.where(secure, g_ze * mu0 / (1.0 + g_ze * mu1), mu0 * z_m)
    return np.log2(1.0 + inner)


def secrecy_rate_values(z_m: np.ndarray, z_e: np.ndarray, secure: np.ndarray,
                        mu1: np.ndarray, gamma: float) -> np.ndarray:
    """Vectorized confidential-message rates over tagged states."""
    r = np.log2(1.0 + mu1 * z_m) - np.log2(1.0 + gamma * mu1 * z_e)
    return np.where(secure, r, 0.0)


class Exponential:
    """Exponential power-gain marginal (Rayleigh amplitude fading)."""

    is_discrete = False

    def __init__(self, mean: float = 1.0):
        if not mean > 0:
            raise ValueError(f"mean must be > 0, got {mean}")
        self.mean = float(mean)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0, np.exp(-x / self.mean) / self.mean, 0.0)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x > 0, -np.expm1(-x / self.mean), 0.0)

    def quantile(self, p):
        p = np.asarray(p, dtype=float)
        return -self.mean * np.log1p(-p)

    def partial_mean(self, x):
        """First partial moment: integral of t*pdf(t) over [0, x]."""
        x = np.asarray(x, dtype=float)
        xm = x / self.mean
        return np.where(x > 0,
                        self.mean - (self.mean + x) * np.exp(-xm), 0.0)

    def __repr__(self):
        return f"Exponential(mean={self.mean})"


class FiniteDiscrete:
    """Finite-support marginal given by points and probabilities."""

    is_discrete = True

    def __init__(self, points, probs):
        pts = np.asarray(points, dtype=float)
        pr = np.asarray(probs, dtype=float)
        if pts.ndim != 1 or pts.shape != pr.shape or pts.size == 0:
            raise ValueError("points and probs must be matching 1-D arrays")
        if np.any(pts < 0):
            raise ValueError("support points must be >= 0")
        if np.any(pr < 0) or abs(pr.sum() - 1.0) > 1e-9:
            raise ValueError("probabilities must be >= 0 and sum to 1")
        order = np.argsort(pts)
        self.points = pts[order]
        self.probs = pr[order]
        if np.any(np.diff(self.points) <= 0):
            raise ValueError("support points must be distinct")
        self._cum = np.cumsum(self.probs)

    @property
    def mean(self) -> float:
        return float(np.dot(self.points, self.probs))

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.points, x, side="right")
        return np.concatenate(([0.0], self._cum))[idx]

    def quantile(self, p):
        p = np.asarray(p, dtype=float)
        idx = np.searchsorted(self._cum, p, side="left")
        return self.points[np.minimum(idx, self.points.size - 1)]

    def partial_mean(self, x):
        x = np.asarray(x, dtype=float)
        cum_m = np.concatenate(([0.0], np.cumsum(self.points * self.probs)))
        idx = np.searchsorted(self.points, x, side="right")
        return cum_m[idx]

    def __repr__(self):
        return f"FiniteDiscrete({self.points.tolist()}, {self.probs.tolist()})"


@dataclass
class FadingDistribution:
    """Joint fading law as a pair of independent marginals."""

    marginal_m: Exponential | FiniteDiscrete
    marginal_e: Exponential | FiniteDiscrete
    independent: bool = True


def rayleigh(mean_m: float = 1.0, mean_e: float = 1.0) -> FadingDistribution:
    """Independent exponential gains (unit-mean by default)."""
    return FadingDistribution(Exponential(mean_m), Exponential(mean_e))
