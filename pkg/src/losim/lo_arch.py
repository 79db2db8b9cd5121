"""Per-element LO phase for central, local and generalized carrier generation."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from .phase_noise import (
    PhaseNoisePsd,
    PhaseTrace,
    PllParams,
    SeedLike,
    cascade_if_pll,
    filter_reference,
    filter_vco,
    settle_samples,
    synthesize,
)


@dataclass(frozen=True)
class IfStage:
    """IF "jitter cleaner" PLL plus white distribution-buffer noise at the IF."""

    pll: PllParams
    dist_floor: float = -math.inf


@dataclass(frozen=True)
class LoArchitecture:
    """``M`` elements served by ``M // N`` PLLs.

    ``mmw_pll.vco_psd`` is the noise of a single central VCO holding the whole
    array's power budget. With ``budget_scaling`` each of the ``M/N`` physical
    VCOs is ``10 log10(M/N)`` dB noisier. Without an IF stage the mm-wave PLLs
    are driven by ``mmw_pll.ref_psd`` (input-referred at ``mmw_pll.f_ref``);
    with one, ``if_stage.pll.ref_psd`` is the crystal and ``mmw_pll.ref_psd``
    is ignored.
    """

    M: int
    N: int
    mmw_pll: PllParams
    if_stage: Optional[IfStage] = None
    budget_scaling: bool = True

    def __post_init__(self):
        if self.M < 1 or self.N < 1:
            raise ValueError("M and N must be >= 1")
        if self.N > self.M or self.M % self.N:
            raise ValueError(f"N={self.N} must divide M={self.M}")
        if self.if_stage is not None and not math.isclose(
                self.if_stage.pll.f_out, self.mmw_pll.f_ref, rel_tol=1e-12):
            raise ValueError("IF PLL output frequency must equal the mm-wave PLL reference")

    @property
    def n_pll(self) -> int:
        return self.M // self.N

    @property
    def vco_psd(self) -> PhaseNoisePsd:
        """PSD of one physical VCO."""
        if not self.budget_scaling:
            return self.mmw_pll.vco_psd
        return self.mmw_pll.vco_psd.shifted(10.0 * math.log10(self.n_pll))

    @property
    def group_of(self) -> np.ndarray:
        return np.arange(self.M) // self.N

    def settle(self, sample_rate: float) -> int:
        """Warm-up samples needed before the loops reach steady state."""
        n = settle_samples(self.mmw_pll.loop_bandwidth, sample_rate, self.mmw_pll.damping)
        if self.if_stage is not None:
            p = self.if_stage.pll
            n = max(n, settle_samples(p.loop_bandwidth, sample_rate, p.damping))
        return n


@dataclass(frozen=True)
class ElementTraceSet:
    """Per-element phase stored as one shared term plus one term per PLL group.

    Element ``m`` has phase ``common + vco[group_of[m]]``.
    """

    sample_rate: float
    common: np.ndarray = field(repr=False)
    vco: np.ndarray = field(repr=False)
    group_of: np.ndarray = field(repr=False)

    @property
    def M(self) -> int:
        return self.group_of.size

    @property
    def n_samples(self) -> int:
        return self.common.size

    @property
    def group_phase(self) -> np.ndarray:
        """(n_groups, T) total phase of each PLL output."""
        return self.vco + self.common

    @property
    def phase(self) -> np.ndarray:
        """(M, T) total phase per element."""
        return self.group_phase[self.group_of]

    @property
    def traces(self) -> List[PhaseTrace]:
        gp = self.group_phase
        return [PhaseTrace(self.sample_rate, gp[g]) for g in self.group_of]


def reference_phase(arch: LoArchitecture, sample_rate: float, n: int,
                    rng: np.random.Generator) -> np.ndarray:
    """Output-referred reference (or IF-cascade) contribution at the mm-wave PLLs."""
    mmw = arch.mmw_pll
    if arch.if_stage is not None:
        st = arch.if_stage
        ref_in = cascade_if_pll(st.pll, st.dist_floor, mmw, sample_rate, n, rng).phase
    elif mmw.ref_psd.is_silent:
        return np.zeros(n)
    else:
        ref_in = synthesize(mmw.ref_psd, sample_rate, n, rng)
    return filter_reference(mmw, ref_in, sample_rate)


def element_traces(arch: LoArchitecture, n_samples: int, sample_rate: float,
                   seed: SeedLike = None, warmup: Optional[int] = None) -> ElementTraceSet:
    """One shared reference trace and ``M/N`` independent PLL-filtered VCO traces.

    ``warmup`` samples (default: five loop time constants of the slowest loop)
    are simulated and discarded so the returned traces are stationary.
    """
    if n_samples <= 0:
        raise ValueError("n_samples must be positive")
    if warmup is None:
        warmup = arch.settle(sample_rate)
    total = warmup + n_samples
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    ref_ss, vco_ss = ss.spawn(2)

    common = reference_phase(arch, sample_rate, total, np.random.default_rng(ref_ss))[warmup:]
    vco_psd = arch.vco_psd
    vco = np.zeros((arch.n_pll, n_samples))
    if not vco_psd.is_silent:
        for g, child in enumerate(vco_ss.spawn(arch.n_pll)):
            raw = synthesize(vco_psd, sample_rate, total, np.random.default_rng(child))
            vco[g] = filter_vco(arch.mmw_pll, raw, sample_rate)[warmup:]
    return ElementTraceSet(sample_rate, np.ascontiguousarray(common), vco, arch.group_of)


def split_correlated_uncorrelated(ts: ElementTraceSet):
    """Across-element mean and per-element residuals (which sum to zero)."""
    phase = ts.phase
    correlated = phase.mean(axis=0)
    residuals = phase - correlated
    return (PhaseTrace(ts.sample_rate, correlated),
            [PhaseTrace(ts.sample_rate, r) for r in residuals])


def architecture_gamma(arch: LoArchitecture,
                       fitted: Optional[Dict[int, float]] = None) -> float:
    """Fraction of VCO noise that is uncorrelated across the array.

    Exact at the extremes (CCG 0, LCG 1). Intermediate ``N`` has no closed
    form and must come from ``fitted`` (see ``sim.fit_gamma``).
    """
    if arch.N == arch.M:
        return 0.0
    if arch.N == 1:
        return 1.0
    if fitted is not None and arch.N in fitted:
        return float(fitted[arch.N])
    raise KeyError(f"no fitted gamma for N={arch.N}; run sim.fit_gamma first")
