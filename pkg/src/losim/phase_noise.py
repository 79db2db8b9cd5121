"""Phase-noise spectra, time-domain trace synthesis and PLL loop filtering.

Conventions
-----------
Densities are single-sideband L(f) in dBc/Hz. Under the small-angle
approximation the one-sided phase PSD is ``S_phi(f) = 2 * L(f)`` rad^2/Hz,
so the variance of a trace is the integral of ``2 * L(f)`` over
``[0, fs/2]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

import numpy as np
from scipy import signal

SeedLike = Union[int, np.random.Generator, np.random.SeedSequence, None]

DEFAULT_DAMPING = 1.0 / math.sqrt(2.0)


def as_rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def db_to_lin(db: float) -> float:
    if db == -math.inf:
        return 0.0
    return 10.0 ** (db / 10.0)


def lin_to_db(x):
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(x)


@dataclass(frozen=True)
class PhaseNoisePsd:
    """White floor plus a 1/f^2 segment; either part may be ``None``.

    ``f2_anchor`` is ``(offset_hz, dbc_hz)``. ``-inf`` densities are allowed
    and mean "no noise".
    """

    white_floor: Optional[float] = None
    f2_anchor: Optional[Tuple[float, float]] = None

    def __post_init__(self):
        if self.f2_anchor is not None:
            f0, level = self.f2_anchor
            if not f0 > 0:
                raise ValueError(f"f2_anchor offset must be > 0 Hz, got {f0}")
            object.__setattr__(self, "f2_anchor", (float(f0), float(level)))
        if self.white_floor is not None and math.isnan(self.white_floor):
            raise ValueError("white_floor is NaN")

    def linear(self, f_offset):
        """SSB density in linear units (1/Hz); vectorised over ``f_offset``."""
        f = np.asarray(f_offset, dtype=float)
        if np.any(f <= 0):
            raise ValueError("phase-noise offset frequency must be > 0")
        out = np.zeros_like(f)
        if self.white_floor is not None:
            out = out + db_to_lin(self.white_floor)
        if self.f2_anchor is not None:
            f0, level = self.f2_anchor
            out = out + db_to_lin(level) * (f0 / f) ** 2
        return out if out.ndim else float(out)

    def shifted(self, delta_db: float) -> "PhaseNoisePsd":
        """Every density raised by ``delta_db``."""
        white = None if self.white_floor is None else self.white_floor + delta_db
        anchor = None
        if self.f2_anchor is not None:
            anchor = (self.f2_anchor[0], self.f2_anchor[1] + delta_db)
        return PhaseNoisePsd(white, anchor)

    @property
    def is_silent(self) -> bool:
        parts = []
        if self.white_floor is not None:
            parts.append(self.white_floor)
        if self.f2_anchor is not None:
            parts.append(self.f2_anchor[1])
        return all(p == -math.inf for p in parts)


def psd_eval(psd: PhaseNoisePsd, f_offset):
    """Density of ``psd`` at ``f_offset`` in dBc/Hz (power sum of both parts)."""
    return lin_to_db(psd.linear(f_offset))


def refer_to_output(psd: PhaseNoisePsd, f_in: float, f_out: float) -> PhaseNoisePsd:
    """Multiply the carrier from ``f_in`` to ``f_out``: +20 log10(f_out/f_in) dB."""
    if not (f_in > 0 and f_out > 0):
        raise ValueError("frequencies must be positive")
    return psd.shifted(20.0 * math.log10(f_out / f_in))


@dataclass(frozen=True)
class PhaseTrace:
    sample_rate: float
    phase: np.ndarray = field(repr=False)

    def __post_init__(self):
        ph = np.array(self.phase, dtype=float)
        if ph.ndim != 1 or ph.size == 0:
            raise ValueError("phase trace must be a non-empty 1-D sequence")
        if not self.sample_rate > 0:
            raise ValueError("sample_rate must be > 0")
        ph.setflags(write=False)
        object.__setattr__(self, "phase", ph)

    def __len__(self):
        return self.phase.size

    def __add__(self, other: "PhaseTrace") -> "PhaseTrace":
        _check_compatible(self, other)
        return PhaseTrace(self.sample_rate, self.phase + other.phase)


def _check_compatible(a: PhaseTrace, b: PhaseTrace):
    if a.sample_rate != b.sample_rate:
        raise ValueError(f"sample rates differ: {a.sample_rate} vs {b.sample_rate}")
    if len(a) != len(b):
        raise ValueError(f"trace lengths differ: {len(a)} vs {len(b)}")


def wiener_increment_variance(psd: PhaseNoisePsd, sample_rate: float) -> float:
    """Per-sample increment variance giving one-sided S_phi(f) = 2 L0 (f0/f)^2.

    A random walk with increment variance q has one-sided PSD
    ``q * fs / (2 pi^2 f^2)`` for f << fs, hence q = 4 pi^2 L0 f0^2 / fs.
    """
    if psd.f2_anchor is None:
        raise ValueError("PSD has no 1/f^2 segment; cannot build a Wiener trace")
    f0, level = psd.f2_anchor
    return 4.0 * math.pi**2 * db_to_lin(level) * f0**2 / sample_rate


def white_sample_variance(psd: PhaseNoisePsd, sample_rate: float) -> float:
    """2 L * fs/2: the one-sided white density integrated up to Nyquist."""
    if psd.white_floor is None:
        raise ValueError("PSD has no white floor; cannot build a white trace")
    return 2.0 * db_to_lin(psd.white_floor) * sample_rate / 2.0


def wiener_phase(psd, sample_rate, shape, rng) -> np.ndarray:
    """Raw Wiener phase array of ``shape`` (last axis is time)."""
    q = wiener_increment_variance(psd, sample_rate)
    if q == 0.0:
        return np.zeros(shape)
    return np.cumsum(rng.standard_normal(shape) * math.sqrt(q), axis=-1)


def white_phase(psd, sample_rate, shape, rng) -> np.ndarray:
    var = white_sample_variance(psd, sample_rate)
    if var == 0.0:
        return np.zeros(shape)
    return rng.standard_normal(shape) * math.sqrt(var)


def gen_wiener_trace(psd: PhaseNoisePsd, sample_rate: float, n: int,
                     seed: SeedLike = None) -> PhaseTrace:
    if n <= 0:
        raise ValueError("n must be positive")
    return PhaseTrace(sample_rate, wiener_phase(psd, sample_rate, n, as_rng(seed)))


def gen_white_trace(psd: PhaseNoisePsd, sample_rate: float, n: int,
                    seed: SeedLike = None) -> PhaseTrace:
    if n <= 0:
        raise ValueError("n must be positive")
    return PhaseTrace(sample_rate, white_phase(psd, sample_rate, n, as_rng(seed)))


def crossover_factor(damping: float) -> float:
    """Ratio of the |H_lp| = |H_hp| crossover to the natural frequency.

    Solves w^4 = wn^4 + 4 zeta^2 wn^2 w^2 for the type-II second-order loop.
    """
    z2 = damping * damping
    return math.sqrt(2.0 * z2 + math.sqrt(4.0 * z2 * z2 + 1.0))


def natural_frequency(bandwidth: float, damping: float = DEFAULT_DAMPING) -> float:
    """Natural frequency (rad/s) of a loop whose noise crossover sits at ``bandwidth``."""
    return 2.0 * math.pi * bandwidth / crossover_factor(damping)


@dataclass(frozen=True)
class PllParams:
    """Type-II second-order PLL.

    ``loop_bandwidth`` is the frequency where the low-pass (reference) and
    high-pass (VCO) responses have equal magnitude.
    """

    f_ref: float
    f_out: float
    loop_bandwidth: float
    ref_psd: PhaseNoisePsd = PhaseNoisePsd()
    vco_psd: PhaseNoisePsd = PhaseNoisePsd()
    damping: float = DEFAULT_DAMPING

    def __post_init__(self):
        if not (self.f_ref > 0 and self.f_out >= self.f_ref):
            raise ValueError(f"need 0 < f_ref <= f_out, got {self.f_ref}, {self.f_out}")
        if not 0 < self.loop_bandwidth < self.f_ref / 10:
            raise ValueError(
                f"loop_bandwidth must be in (0, f_ref/10 = {self.f_ref / 10:g}) Hz, "
                f"got {self.loop_bandwidth:g}")
        if not self.damping > 0:
            raise ValueError("damping must be > 0")

    @property
    def ratio(self) -> float:
        return self.f_out / self.f_ref

    @property
    def wn(self) -> float:
        return natural_frequency(self.loop_bandwidth, self.damping)

    def output_psd(self, f):
        """Output-referred total density (linear SSB) predicted by the loop model."""
        ref_gain, vco_gain = pll_transfer(self, f)
        return ref_gain**2 * self.ref_psd.linear(f) + vco_gain**2 * self.vco_psd.linear(f)


def _lp_hp_continuous(wn: float, zeta: float):
    s = 2.0 * zeta * wn
    den = np.array([1.0, s, wn * wn])
    lp = np.array([0.0, s, wn * wn])
    hp = np.array([1.0, 0.0, 0.0])
    return lp, hp, den


def loop_response(wn: float, zeta: float, f):
    """Complex (H_lp, H_hp) of the unit-gain prototype at frequencies ``f`` (Hz)."""
    s = 2j * np.pi * np.asarray(f, dtype=float)
    den = s * s + 2.0 * zeta * wn * s + wn * wn
    return (2.0 * zeta * wn * s + wn * wn) / den, s * s / den


def pll_transfer(params: PllParams, f):
    """Magnitudes ``(|H_ref|, |H_vco|)`` at offset ``f``; H_ref includes the ratio."""
    f = np.asarray(f, dtype=float)
    if np.any(f <= 0):
        raise ValueError("frequency must be > 0")
    lp, hp = loop_response(params.wn, params.damping, f)
    ref_gain = params.ratio * np.abs(lp)
    vco_gain = np.abs(hp)
    if ref_gain.ndim == 0:
        return float(ref_gain), float(vco_gain)
    return ref_gain, vco_gain


def loop_sos(wn: float, zeta: float, sample_rate: float):
    """Bilinear-transformed (lowpass, highpass) second-order sections."""
    p = np.roots([1.0, 2.0 * zeta * wn, wn * wn])
    z_lp = np.array([-wn / (2.0 * zeta)])
    k_lp = 2.0 * zeta * wn
    zd, pd, kd = signal.bilinear_zpk(z_lp, p, k_lp, sample_rate)
    sos_lp = signal.zpk2sos(zd, pd, kd)
    zd, pd, kd = signal.bilinear_zpk(np.zeros(2), p, 1.0, sample_rate)
    sos_hp = signal.zpk2sos(zd, pd, kd)
    return sos_lp, sos_hp


def filter_reference(params: PllParams, phase: np.ndarray, sample_rate: float) -> np.ndarray:
    """Discrete H_ref applied along the last axis (includes the multiplication ratio)."""
    sos_lp, _ = loop_sos(params.wn, params.damping, sample_rate)
    return params.ratio * signal.sosfilt(sos_lp, phase, axis=-1)


def filter_vco(params: PllParams, phase: np.ndarray, sample_rate: float) -> np.ndarray:
    _, sos_hp = loop_sos(params.wn, params.damping, sample_rate)
    return signal.sosfilt(sos_hp, phase, axis=-1)


def pll_filter_traces(params: PllParams, ref_trace: PhaseTrace,
                      vco_trace: PhaseTrace) -> PhaseTrace:
    """Output phase = H_ref * reference + H_vco * VCO (discrete, bilinear)."""
    _check_compatible(ref_trace, vco_trace)
    fs = ref_trace.sample_rate
    out = filter_reference(params, ref_trace.phase, fs) + filter_vco(params, vco_trace.phase, fs)
    return PhaseTrace(fs, out)


def settle_samples(bandwidth: float, sample_rate: float,
                   damping: float = DEFAULT_DAMPING, n_tau: float = 5.0) -> int:
    """Samples spanning ``n_tau`` loop time constants (1/(zeta wn))."""
    tau = 1.0 / (damping * natural_frequency(bandwidth, damping))
    return int(math.ceil(n_tau * tau * sample_rate))


def cascade_if_pll(if_params: PllParams, dist_floor: float, mmw_params: PllParams,
                   sample_rate: float, n: int, seed: SeedLike = None,
                   ref_trace: Optional[PhaseTrace] = None) -> PhaseTrace:
    """Reference seen by the mm-wave PLLs when an IF PLL sits in front of them.

    The crystal reference (``if_params.ref_psd`` unless ``ref_trace`` is given)
    is multiplied to the IF by ``if_params``; the IF VCO adds its own noise and
    the distribution buffers add a white floor ``dist_floor`` (dBc/Hz at the
    IF). The result is input-referred to ``mmw_params``.
    """
    if not math.isclose(if_params.f_out, mmw_params.f_ref, rel_tol=1e-12):
        raise ValueError(
            f"frequency plan mismatch: IF PLL output {if_params.f_out:g} Hz != "
            f"mm-wave reference {mmw_params.f_ref:g} Hz")
    rng = as_rng(seed)
    if ref_trace is None:
        ref = synthesize(if_params.ref_psd, sample_rate, n, rng)
    else:
        ref = ref_trace.phase
    vco = synthesize(if_params.vco_psd, sample_rate, n, rng)
    out = filter_reference(if_params, ref, sample_rate) + filter_vco(if_params, vco, sample_rate)
    out = out + white_phase(PhaseNoisePsd(white_floor=dist_floor), sample_rate, n, rng)
    return PhaseTrace(sample_rate, out)


def synthesize(psd: PhaseNoisePsd, sample_rate: float, shape, seed: SeedLike = None) -> np.ndarray:
    """Phase array with both parts of ``psd``; rows along axis 0 are independent."""
    rng = as_rng(seed)
    out = np.zeros(shape)
    if psd.white_floor is not None:
        out += white_phase(psd, sample_rate, shape, rng)
    if psd.f2_anchor is not None:
        out += wiener_phase(psd, sample_rate, shape, rng)
    return out
