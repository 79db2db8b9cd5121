"""Baseline scenarios: 75 GHz carrier, 100 MHz crystal, 2 GS/s symbols."""
from __future__ import annotations

import math
from dataclasses import replace

from .lo_arch import IfStage, LoArchitecture
from .phase_noise import PhaseNoisePsd, PllParams
from .rx_dsp import CarrierRecoveryParams
from .sim import SimConfig

F_LO = 75e9
F_XTAL = 100e6
F_IF = 5e9
SYMBOL_RATE = 2e9

XTAL_FLOOR = -140.0          # dBc/Hz at 100 MHz
CENTRAL_VCO = (1e6, -90.0)   # whole-array budget in one VCO
IF_VCO = (1e6, -110.0)
IF_BW = 300e3
BUFFER_FLOOR = -135.0


def if_stage(vco=IF_VCO, bandwidth: float = IF_BW, dist_floor: float = BUFFER_FLOOR,
             xtal_floor: float = XTAL_FLOOR) -> IfStage:
    pll = PllParams(F_XTAL, F_IF, bandwidth, PhaseNoisePsd(white_floor=xtal_floor),
                    PhaseNoisePsd(f2_anchor=vco))
    return IfStage(pll, dist_floor)


def mmw_pll(bandwidth: float, use_if: bool = True, vco=CENTRAL_VCO,
            xtal_floor: float = XTAL_FLOOR) -> PllParams:
    f_ref = F_IF if use_if else F_XTAL
    ref = PhaseNoisePsd() if use_if else PhaseNoisePsd(white_floor=xtal_floor)
    return PllParams(f_ref, F_LO, bandwidth, ref, PhaseNoisePsd(f2_anchor=vco))


def array_arch(M: int, N: int, pll_bw: float = 5e6, use_if: bool = True,
               vco=CENTRAL_VCO) -> LoArchitecture:
    return LoArchitecture(M, N, mmw_pll(pll_bw, use_if, vco),
                          if_stage() if use_if else None)


def single_element(ref_out_dbc: float, pll_bw: float, vco=CENTRAL_VCO) -> LoArchitecture:
    """One element whose crystal noise is given output-referred at the carrier."""
    ratio_db = 20.0 * math.log10(F_LO / F_XTAL)
    ref = PhaseNoisePsd(white_floor=ref_out_dbc - ratio_db)
    pll = PllParams(F_XTAL, F_LO, pll_bw, ref, PhaseNoisePsd(f2_anchor=vco))
    return LoArchitecture(1, 1, pll)


def cr_benefit_config(ref_out_dbc: float = -85.0, pll_bw: float = 100e3,
                      cr_bw: float = 10e6, **kw) -> SimConfig:
    kw.setdefault("n_symbols", 100_000)
    return SimConfig(single_element(ref_out_dbc, pll_bw), K=1,
                     cr=CarrierRecoveryParams(cr_bw), **kw)


def multiuser_config(M: int = 128, N: int = 32, K: int = 16, pll_bw: float = 5e6,
                     cr_bw: float = 10e6, use_if: bool = True, **kw) -> SimConfig:
    return SimConfig(array_arch(M, N, pll_bw, use_if), K=K,
                     cr=CarrierRecoveryParams(cr_bw), **kw)


def flagship_config(**kw) -> SimConfig:
    """128 elements, 4 PLLs behind an IF PLL, 16 users 10 degrees apart."""
    return multiuser_config(128, 32, 16, **kw)


def with_vco(cfg: SimConfig, vco) -> SimConfig:
    pll = replace(cfg.arch.mmw_pll, vco_psd=PhaseNoisePsd(f2_anchor=vco))
    return replace(cfg, arch=replace(cfg.arch, mmw_pll=pll))
