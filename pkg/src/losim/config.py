"""YAML run configuration with unit-explicit keys.

Every section and key has a default, so an empty file is a valid baseline
run. Unknown keys and out-of-range values raise ``ConfigError`` naming the
offending key.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import yaml

from .channel import reference_budgets
from .constellation import Constellation
from .lo_arch import IfStage, LoArchitecture
from .phase_noise import DEFAULT_DAMPING, PhaseNoisePsd, PllParams
from .power_model import PowerModelParams
from .rx_dsp import CarrierRecoveryParams
from .sim import DEFAULT_CR_POLICY, SimConfig

EXPERIMENTS = ("power-sweep", "link-budget", "pll-bw-sweep", "user-sweep",
               "subarray-sweep", "ber-curve", "single-run")


class ConfigError(ValueError):
    pass


def _range(lo=None, hi=None, lo_open=False, hi_open=False, choices=None):
    return {"lo": lo, "hi": hi, "lo_open": lo_open, "hi_open": hi_open, "choices": choices}


@dataclass(frozen=True)
class PowerSection:
    M: int = field(default=128, metadata=_range(2))
    D_X_mm: float = field(default=64.0, metadata=_range(0))
    D_Y_mm: float = field(default=32.0, metadata=_range(0))
    L_route_db_per_mm: float = field(default=0.2, metadata=_range(0))
    L_split_db: float = field(default=1.5, metadata=_range(0))
    splitter_ways: int = field(default=4, metadata=_range(2))
    vco_fom_dbc_hz: float = field(default=180.0)
    pn_offset_hz: float = field(default=1e6, metadata=_range(0, lo_open=True))
    pn_dbc_hz: float = field(default=-90.0)
    f_lo_hz: float = field(default=75e9, metadata=_range(0, lo_open=True))
    eta_osc: float = field(default=0.2, metadata=_range(0, 1, lo_open=True))
    eta_driver: float = field(default=0.2, metadata=_range(0, 1, lo_open=True))
    pll_overhead_w: float = field(default=2e-3, metadata=_range(0))
    load_w: float = field(default=0.0, metadata=_range(0))
    eta_combination: str = field(default="ratio", metadata=_range(choices=("ratio", "product")))

    def build(self) -> PowerModelParams:
        return PowerModelParams(
            M=self.M, D_X=self.D_X_mm, D_Y=self.D_Y_mm, L_mm=self.L_route_db_per_mm,
            L_split=self.L_split_db, P_fanout=self.splitter_ways, FoM=self.vco_fom_dbc_hz,
            pn_target=(self.pn_offset_hz, self.pn_dbc_hz), f_LO=self.f_lo_hz,
            eta_osc=self.eta_osc, eta_driver=self.eta_driver,
            P_pll_overhead=self.pll_overhead_w, P_load=self.load_w,
            eta_combination=self.eta_combination)


@dataclass(frozen=True)
class LinkSection:
    distance_m: float = field(default=100.0, metadata=_range(1))
    rx_nf_db: float = field(default=5.0, metadata=_range(0))
    target_snr_db: float = 26.0

    def build(self) -> dict:
        return {name: dataclasses.replace(b, distance=self.distance_m, rx_nf=self.rx_nf_db,
                                          target_snr=self.target_snr_db)
                for name, b in reference_budgets().items()}


@dataclass(frozen=True)
class IfSection:
    enabled: bool = True
    f_if_hz: float = field(default=5e9, metadata=_range(0, lo_open=True))
    vco_dbc_hz_at_1mhz: float = -110.0
    bw_hz: float = field(default=300e3, metadata=_range(0, lo_open=True))
    buffer_floor_dbc_hz: float = -135.0


@dataclass(frozen=True)
class LoSection:
    M: int = field(default=128, metadata=_range(1))
    N: int = field(default=32, metadata=_range(1))
    pll_bw_hz: float = field(default=5e6, metadata=_range(0, lo_open=True))
    damping: float = field(default=DEFAULT_DAMPING, metadata=_range(0, lo_open=True))
    f_lo_hz: float = field(default=75e9, metadata=_range(0, lo_open=True))
    vco_dbc_hz_at_1mhz: float = -90.0
    xtal_hz: float = field(default=100e6, metadata=_range(0, lo_open=True))
    xtal_floor_dbc_hz: float = -140.0
    ref_out_dbc_hz: Optional[float] = None
    budget_scaling: bool = True
    if_pll: IfSection = IfSection()

    def build(self) -> LoArchitecture:
        if self.M % self.N:
            raise ConfigError(f"lo.N={self.N} must divide lo.M={self.M}")
        vco = PhaseNoisePsd(f2_anchor=(1e6, self.vco_dbc_hz_at_1mhz))
        floor = self.xtal_floor_dbc_hz
        if self.ref_out_dbc_hz is not None:
            floor = self.ref_out_dbc_hz - 20.0 * math.log10(self.f_lo_hz / self.xtal_hz)
        xtal = PhaseNoisePsd(white_floor=floor)
        try:
            if self.if_pll.enabled:
                ip = self.if_pll
                if_pll = PllParams(self.xtal_hz, ip.f_if_hz, ip.bw_hz, xtal,
                                   PhaseNoisePsd(f2_anchor=(1e6, ip.vco_dbc_hz_at_1mhz)),
                                   self.damping)
                mmw = PllParams(ip.f_if_hz, self.f_lo_hz, self.pll_bw_hz, PhaseNoisePsd(), vco,
                                self.damping)
                stage = IfStage(if_pll, ip.buffer_floor_dbc_hz)
            else:
                mmw = PllParams(self.xtal_hz, self.f_lo_hz, self.pll_bw_hz, xtal, vco,
                                self.damping)
                stage = None
            return LoArchitecture(self.M, self.N, mmw, stage, self.budget_scaling)
        except ValueError as exc:
            raise ConfigError(f"lo: {exc}") from exc


@dataclass(frozen=True)
class SimSection:
    symbol_rate_hz: float = field(default=2e9, metadata=_range(0, lo_open=True))
    constellation: str = field(default="qpsk", metadata=_range(
        choices=("qpsk", "16qam", "64qam", "256qam")))
    K: int = field(default=1, metadata=_range(1))
    cr_bw_hz: Optional[float] = field(default=10e6, metadata=_range(0, lo_open=True))
    cr_damping: float = field(default=DEFAULT_DAMPING, metadata=_range(0, lo_open=True))
    epoch_s: float = field(default=1e-4, metadata=_range(0, lo_open=True))
    n_symbols: int = field(default=200_000, metadata=_range(1))
    n_trials: int = field(default=10, metadata=_range(1))
    thermal_snr_db: Optional[float] = None
    user_separation_deg: float = field(default=10.0, metadata=_range(0, 180, lo_open=True))
    element_spacing_wl: float = field(default=0.5, metadata=_range(0, lo_open=True))
    beamformer: str = field(default="zf", metadata=_range(choices=("zf", "conj")))
    transient_symbols: Optional[int] = field(default=None, metadata=_range(0))
    pilot_symbols: int = field(default=512, metadata=_range(0))


@dataclass(frozen=True)
class SweepSection:
    pll_bw_hz: List[float] = field(default_factory=lambda: [
        1e4, 3.16e4, 1e5, 3.16e5, 1e6, 3.16e6])
    K: List[int] = field(default_factory=lambda: [1, 2, 4, 8, 16])
    N: List[int] = field(default_factory=lambda: [1, 2, 4, 8, 16, 32, 64, 128])
    separation_deg: List[float] = field(default_factory=lambda: [10.0])
    thermal_snr_db: List[float] = field(default_factory=lambda: [0.0, 5.0, 10.0, 15.0, 20.0])
    constellations: List[str] = field(default_factory=lambda: ["qpsk", "16qam"])
    cr_policy: Dict[str, List[Tuple[float, float]]] = field(
        default_factory=lambda: {k: [list(r) for r in v] for k, v in DEFAULT_CR_POLICY.items()})
    alpha: Optional[float] = None


@dataclass(frozen=True)
class RunConfig:
    experiment: str = field(default="single-run", metadata=_range(choices=EXPERIMENTS))
    seed: int = field(default=0, metadata=_range(0, 2**64 - 1))
    jobs: int = field(default=1, metadata=_range(1))
    out: str = "results"
    power: PowerSection = PowerSection()
    link: LinkSection = LinkSection()
    lo: LoSection = LoSection()
    sim: SimSection = SimSection()
    sweep: SweepSection = SweepSection()

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def content_hash(self) -> str:
        """Hash of everything that affects results (output location excluded)."""
        d = self.to_dict()
        d.pop("out")
        d.pop("jobs")
        blob = json.dumps(d, sort_keys=True, default=repr).encode()
        return hashlib.sha1(blob).hexdigest()[:12]

    def power_params(self) -> PowerModelParams:
        return self.power.build()

    def budgets(self) -> dict:
        return self.link.build()

    def arch(self) -> LoArchitecture:
        return self.lo.build()

    def sim_config(self) -> SimConfig:
        s = self.sim
        cr = None if s.cr_bw_hz is None else CarrierRecoveryParams(s.cr_bw_hz, s.cr_damping)
        try:
            return SimConfig(
                arch=self.arch(), K=s.K, constellation=s.constellation,
                symbol_rate=s.symbol_rate_hz, cr=cr, epoch=s.epoch_s,
                n_symbols=s.n_symbols, n_trials=s.n_trials, seed=self.seed,
                thermal_snr=s.thermal_snr_db, user_separation=s.user_separation_deg,
                element_spacing=s.element_spacing_wl, beamformer=s.beamformer,
                transient=s.transient_symbols, pilot_symbols=s.pilot_symbols)
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"sim: {exc}") from exc

    def validate(self) -> "RunConfig":
        """Build every nested object so errors surface before any work starts."""
        self.power_params()
        self.budgets()
        self.sim_config()
        for n in self.sweep.N:
            if self.lo.M % n:
                raise ConfigError(f"sweep.N: {n} does not divide lo.M={self.lo.M}")
        for k in self.sweep.K:
            if not 1 <= k <= self.lo.M:
                raise ConfigError(f"sweep.K: {k} outside expected range [1, {self.lo.M}]")
        for bw in self.sweep.pll_bw_hz:
            if not 0 < bw < self.lo.if_pll.f_if_hz / 10 if self.lo.if_pll.enabled \
                    else not 0 < bw < self.lo.xtal_hz / 10:
                raise ConfigError(f"sweep.pll_bw_hz: {bw:g} outside (0, f_ref/10)")
        for name in self.sweep.constellations:
            try:
                canon = Constellation.from_name(name).name
            except ValueError as exc:
                raise ConfigError(f"sweep.constellations: {exc}") from None
            if canon not in self.sweep.cr_policy:
                raise ConfigError(f"sweep.cr_policy: no table for {canon!r}")
        return self


def _check_value(key: str, value, meta):
    choices = meta.get("choices")
    if choices is not None and value not in choices:
        raise ConfigError(f"{key}: {value!r} not one of {list(choices)}")
    lo, hi = meta.get("lo"), meta.get("hi")
    if lo is None and hi is None:
        return
    bad = ((lo is not None and (value <= lo if meta["lo_open"] else value < lo))
           or (hi is not None and (value >= hi if meta["hi_open"] else value > hi)))
    if bad:
        lb = "(" if meta["lo_open"] else "["
        rb = ")" if meta["hi_open"] else "]"
        rng = f"{lb}{'-inf' if lo is None else lo}, {'inf' if hi is None else hi}{rb}"
        raise ConfigError(f"{key}: {value!r} outside expected range {rng}")


def _coerce(key: str, value, tp: str):
    optional = tp.startswith("Optional[")
    if optional:
        if value is None:
            return None
        tp = tp[len("Optional["):-1]
    try:
        if tp == "bool":
            if not isinstance(value, bool):
                raise TypeError
            return value
        if tp == "int":
            if isinstance(value, bool) or float(value) != int(float(value)):
                raise TypeError
            return int(float(value))
        if tp == "float":
            if isinstance(value, bool):
                raise TypeError
            return float(value)
        if tp == "str":
            if not isinstance(value, str):
                raise TypeError
            return value.lower()
        if tp == "List[float]":
            return [float(v) for v in value]
        if tp == "List[int]":
            return [_coerce(key, v, "int") for v in value]
        if tp == "List[str]":
            return [str(v).lower() for v in value]
        if tp == "List[Tuple[float, float]]":
            rows = [tuple(float(x) for x in r) for r in value]
            if not rows or any(len(r) != 2 for r in rows):
                raise TypeError
            return rows
        if tp == "Dict[str, List[Tuple[float, float]]]":
            if not isinstance(value, dict):
                raise TypeError
            return {str(k).lower(): _coerce(f"{key}.{k}", v, "List[Tuple[float, float]]")
                    for k, v in value.items()}
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: cannot read {value!r} as {tp}") from None
    raise ConfigError(f"{key}: unsupported field type {tp}")


def _build(cls, data, prefix: str = ""):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{prefix or 'config'}: expected a mapping, got {type(data).__name__}")
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        where = prefix.rstrip(".") or "top level"
        raise ConfigError(f"unknown key(s) {unknown} in {where}; expected {sorted(known)}")
    kwargs = {}
    for name, f in known.items():
        if name not in data:
            continue
        key = prefix + name
        if dataclasses.is_dataclass(f.default):
            kwargs[name] = _build(type(f.default), data[name], key + ".")
            continue
        value = _coerce(key, data[name], str(f.type))
        if value is not None and not isinstance(value, list):
            _check_value(key, value, f.metadata)
        kwargs[name] = value
    return cls(**kwargs)


def from_dict(data: Optional[dict]) -> RunConfig:
    return _build(RunConfig, data).validate()


def parse_config(path) -> RunConfig:
    """Read and fully validate a YAML run configuration."""
    text = Path(path).read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML: {exc}") from exc
    return from_dict(data)


def override(cfg: RunConfig, **changes: Any) -> RunConfig:
    """Top-level replacement (e.g. from CLI flags), re-validated."""
    changes = {k: v for k, v in changes.items() if v is not None}
    return from_dict({**cfg.to_dict(), **changes}) if changes else cfg
