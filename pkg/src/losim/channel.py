"""Link budget arithmetic and line-of-sight ULA channels."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT

THERMAL_FLOOR_DBM_HZ = -174.0


def path_loss(carrier: float, distance: float, loss_exponent: float) -> float:
    """Free-space loss to a 1 m reference, then 10 n log10(d) beyond it (dB)."""
    if distance < 1.0:
        raise ValueError("distance must be >= 1 m")
    fspl_1m = 20.0 * math.log10(4.0 * math.pi * carrier / SPEED_OF_LIGHT)
    return fspl_1m + 10.0 * loss_exponent * math.log10(distance)


def noise_power(bandwidth: float, nf: float) -> float:
    """Input-referred thermal noise power in dBm."""
    if bandwidth <= 0:
        raise ValueError("bandwidth must be > 0")
    return THERMAL_FLOOR_DBM_HZ + 10.0 * math.log10(bandwidth) + nf


def array_gain_db(n_elements: int) -> float:
    return 10.0 * math.log10(n_elements)


@dataclass(frozen=True)
class LinkBudget:
    bandwidth: float
    rx_nf: float
    carrier: float
    loss_exponent: float
    distance: float
    target_snr: float
    bs_gain: float = 0.0
    ue_gain: float = 0.0

    def __post_init__(self):
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be > 0")
        if self.distance < 1.0:
            raise ValueError("distance must be >= 1 m")
        if not 1.5 <= self.loss_exponent <= 6.0:
            raise ValueError("loss_exponent must be in [1.5, 6]")

    def rows(self) -> dict:
        """Every Table-style row, in presentation order."""
        return {
            "bandwidth_mhz": self.bandwidth / 1e6,
            "rx_nf_db": self.rx_nf,
            "noise_power_dbm": noise_power(self.bandwidth, self.rx_nf),
            "carrier_ghz": self.carrier / 1e9,
            "loss_exponent": self.loss_exponent,
            "path_loss_db": path_loss(self.carrier, self.distance, self.loss_exponent),
            "rx_snr_db": self.target_snr,
            "bs_gain_db": self.bs_gain,
            "ue_gain_db": self.ue_gain,
            "ue_tx_power_dbm": required_tx_power(self),
        }


def required_tx_power(budget: LinkBudget) -> float:
    """UE radiated power (dBm) that meets ``target_snr`` at the base station."""
    return (budget.target_snr + noise_power(budget.bandwidth, budget.rx_nf)
            + path_loss(budget.carrier, budget.distance, budget.loss_exponent)
            - budget.bs_gain - budget.ue_gain)


def reference_budgets() -> dict:
    """RF, mm-wave without array gain, and mm-wave with 128/16-element arrays."""
    common = dict(rx_nf=5.0, distance=100.0, target_snr=26.0)
    return {
        "RF": LinkBudget(bandwidth=20e6, carrier=2.5e9, loss_exponent=2.9, **common),
        "mmw1": LinkBudget(bandwidth=2e9, carrier=60e9, loss_exponent=2.2, **common),
        "mmw2": LinkBudget(bandwidth=2e9, carrier=60e9, loss_exponent=2.2,
                           bs_gain=array_gain_db(128), ue_gain=array_gain_db(16), **common),
    }


@dataclass(frozen=True)
class ChannelMatrix:
    entries: np.ndarray = field(repr=False)
    user_angles: tuple
    spacing: float = 0.5

    @property
    def M(self) -> int:
        return self.entries.shape[0]

    @property
    def K(self) -> int:
        return self.entries.shape[1]

    @property
    def cond(self) -> float:
        return float(np.linalg.cond(self.entries))


def steering_vector(M: int, angle_deg: float, spacing: float = 0.5) -> np.ndarray:
    m = np.arange(M)
    return np.exp(2j * np.pi * spacing * m * math.sin(math.radians(angle_deg)))


def user_angles(K: int, separation_deg: float) -> np.ndarray:
    """K angles ``separation_deg`` apart, centred on broadside."""
    return (np.arange(K) - (K - 1) / 2.0) * separation_deg


def los_channel(M: int, angles: Sequence[float], spacing: float = 0.5) -> ChannelMatrix:
    """M x K matrix whose columns are unit-modulus ULA steering vectors."""
    angles = tuple(float(a) for a in angles)
    if len(angles) > M:
        raise ValueError(f"K={len(angles)} users exceed M={M} elements")
    if any(abs(a) >= 90.0 for a in angles):
        raise ValueError("user angles must satisfy |angle| < 90 degrees")
    if len(set(angles)) != len(angles):
        warnings.warn("duplicate user angles: zero-forcing will be ill-conditioned",
                      RuntimeWarning, stacklevel=2)
    H = np.stack([steering_vector(M, a, spacing) for a in angles], axis=1)
    return ChannelMatrix(H, angles, spacing)


def apply_channel(H, x, noise_power: float = 0.0, rng=None) -> np.ndarray:
    """H x + n for x of shape (K,) or (K, T); n is CN(0, noise_power) per element."""
    Hm = H.entries if isinstance(H, ChannelMatrix) else np.asarray(H)
    y = Hm @ np.asarray(x)
    if noise_power > 0:
        rng = np.random.default_rng(rng)
        n = rng.standard_normal(y.shape) + 1j * rng.standard_normal(y.shape)
        y = y + math.sqrt(noise_power / 2.0) * n
    return y
