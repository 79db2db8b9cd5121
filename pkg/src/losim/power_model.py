"""LO chain power versus elements per PLL (H-tree routing + splitters + PLL overhead)."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np


def dbm_to_w(dbm):
    return 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0)


def w_to_dbm(w):
    return 10.0 * np.log10(np.asarray(w, dtype=float)) + 30.0


def _is_pow2(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0


@dataclass(frozen=True)
class PowerModelParams:
    """Defaults describe a 128-element 75 GHz panel of 64 mm x 32 mm.

    ``eta_combination`` selects how the oscillator and driver efficiencies
    enter the distribution power: ``"ratio"`` converts VCO DC power to RF
    output with ``eta_osc`` and RF back to driver DC power with
    ``eta_driver``; ``"product"`` divides by ``eta_osc * eta_driver``.
    """

    M: int = 128
    D_X: float = 64.0
    D_Y: float = 32.0
    L_mm: float = 0.2
    L_split: float = 1.5
    P_fanout: int = 4
    FoM: float = 180.0
    pn_target: Tuple[float, float] = (1e6, -90.0)
    f_LO: float = 75e9
    eta_osc: float = 0.2
    eta_driver: float = 0.2
    P_pll_overhead: float = 2e-3
    P_load: float = 0.0
    eta_combination: str = "ratio"

    def __post_init__(self):
        if not _is_pow2(self.M):
            raise ValueError(f"M must be a power of 2 for an H-tree, got {self.M}")
        for name in ("D_X", "D_Y", "L_mm", "L_split", "P_pll_overhead", "P_load"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        for name in ("eta_osc", "eta_driver"):
            if not 0 < getattr(self, name) <= 1:
                raise ValueError(f"{name} must be in (0, 1]")
        if self.P_fanout < 2:
            raise ValueError("P_fanout must be >= 2")
        if self.pn_target[0] <= 0:
            raise ValueError("phase-noise target offset must be > 0")
        if self.eta_combination not in ("ratio", "product"):
            raise ValueError("eta_combination must be 'ratio' or 'product'")

    @property
    def valid_N(self) -> List[int]:
        return [2**k for k in range(int(math.log2(self.M)) + 1)]


def _check_N(N: int, p: PowerModelParams):
    if not _is_pow2(N) or N > p.M:
        raise ValueError(f"N={N} must be a power of 2 dividing M={p.M}")


def routing_loss(N: int, p: PowerModelParams) -> float:
    """H-tree routing loss downstream of one PLL, dB."""
    _check_N(N, p)
    log_m = math.log2(p.M)
    s = sum(2.0 ** (k - log_m) for k in range(int(math.log2(N))))
    return 0.5 * s * (p.D_X + p.D_Y) * p.L_mm


def splitter_loss(N: int, p: PowerModelParams) -> float:
    """Excess loss of the P-way splitter tree feeding N elements, dB."""
    if N < 1:
        raise ValueError("N must be >= 1")
    return p.L_split * math.log(N) / math.log(p.P_fanout)


def vco_power(p: PowerModelParams) -> float:
    """DC power (W) of a VCO meeting ``pn_target`` at ``f_LO`` with figure of merit ``FoM``.

    FoM = -L(df) + 20 log10(f_LO/df) - 10 log10(P / 1 mW).
    """
    f_delta, level = p.pn_target
    p_dbm = -level + 20.0 * math.log10(p.f_LO / f_delta) - p.FoM
    return float(dbm_to_w(p_dbm))


def _eta_db(p: PowerModelParams) -> float:
    if p.eta_combination == "product":
        return -10.0 * math.log10(p.eta_osc * p.eta_driver)
    return 10.0 * math.log10(p.eta_osc) - 10.0 * math.log10(p.eta_driver)


def distribution_power(N: int, p: PowerModelParams) -> float:
    """Total DC power (W) of the M/N distribution networks.

    Each network is fed by a VCO holding 1/(M/N) of the budget and must
    overcome its routing and splitter loss, so lossless distribution is
    independent of N.
    """
    _check_N(N, p)
    n_pll = p.M // N
    per_net_dbm = (float(w_to_dbm(vco_power(p))) - 10.0 * math.log10(n_pll)
                   + splitter_loss(N, p) + routing_loss(N, p) + _eta_db(p))
    return n_pll * float(dbm_to_w(per_net_dbm))


def pll_power(N: int, p: PowerModelParams) -> float:
    _check_N(N, p)
    return (p.M // N) * p.P_pll_overhead


@dataclass(frozen=True)
class PowerBreakdown:
    N: int
    P_load_W: float
    P_distr_W: float
    P_vco_W: float
    P_pll_W: float
    P_ref_W: float = 0.0

    @property
    def total_W(self) -> float:
        return self.P_load_W + self.P_distr_W + self.P_vco_W + self.P_pll_W + self.P_ref_W


def total_lo_power(N: int, p: PowerModelParams) -> PowerBreakdown:
    """P_load + P_distr + P_VCO + P_PLL (+ P_ref, neglected)."""
    return PowerBreakdown(
        N=N,
        P_load_W=p.P_load,
        P_distr_W=distribution_power(N, p),
        P_vco_W=vco_power(p),
        P_pll_W=pll_power(N, p),
    )


@dataclass(frozen=True)
class PowerCurve:
    rows: List[PowerBreakdown] = field(repr=False)

    @property
    def N(self) -> np.ndarray:
        return np.array([r.N for r in self.rows])

    @property
    def total_W(self) -> np.ndarray:
        return np.array([r.total_W for r in self.rows])

    @property
    def argmin(self) -> int:
        return int(self.N[np.argmin(self.total_W)])

    @property
    def min_W(self) -> float:
        return float(self.total_W.min())


def sweep_power(p: PowerModelParams) -> PowerCurve:
    return PowerCurve([total_lo_power(N, p) for N in p.valid_N])
