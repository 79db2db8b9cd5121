import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import signal

from losim.phase_noise import (
    PhaseNoisePsd,
    PhaseTrace,
    PllParams,
    cascade_if_pll,
    crossover_factor,
    filter_reference,
    gen_white_trace,
    gen_wiener_trace,
    loop_response,
    pll_filter_traces,
    pll_transfer,
    psd_eval,
    refer_to_output,
    settle_samples,
)

from oracles import band_db, welch_ssb

FS = 2e9


def test_psd_eval_anchor_and_slope():
    psd = PhaseNoisePsd(f2_anchor=(1e6, -90.0))
    assert psd_eval(psd, 1e6) == pytest.approx(-90.0, abs=1e-9)
    assert psd_eval(psd, 10e6) == pytest.approx(-110.0, abs=1e-9)


def test_psd_eval_power_sum():
    psd = PhaseNoisePsd(white_floor=-140.0, f2_anchor=(1e6, -140.0))
    assert psd_eval(psd, 1e6) == pytest.approx(10 * math.log10(2e-14), abs=1e-9)
    assert psd_eval(psd, 1e6) == pytest.approx(-136.99, abs=0.01)


@pytest.mark.parametrize("f", [0.0, -1.0])
def test_psd_eval_rejects_nonpositive_offset(f):
    with pytest.raises(ValueError):
        psd_eval(PhaseNoisePsd(white_floor=-100.0), f)


@given(level=st.floats(-160, -40), f=st.floats(1e2, 1e9))
def test_f2_segment_falls_20db_per_decade(level, f):
    psd = PhaseNoisePsd(f2_anchor=(1e6, level))
    assert psd_eval(psd, f) - psd_eval(psd, 10 * f) == pytest.approx(20.0, abs=1e-9)


@given(level=st.floats(-200, 0), f=st.floats(1e-3, 1e12))
def test_psd_eval_finite(level, f):
    psd = PhaseNoisePsd(white_floor=level, f2_anchor=(1e6, level))
    assert math.isfinite(psd_eval(psd, f))


def test_refer_to_output_examples():
    floor = PhaseNoisePsd(white_floor=-140.0)
    assert refer_to_output(floor, 100e6, 60e9).white_floor == pytest.approx(-84.44, abs=0.01)
    assert refer_to_output(floor, 100e6, 5e9).white_floor == pytest.approx(-106.02, abs=0.01)
    assert refer_to_output(floor, 5e9, 5e9) == floor


def test_wiener_zero_noise_is_zero():
    tr = gen_wiener_trace(PhaseNoisePsd(f2_anchor=(1e6, -math.inf)), FS, 1000, seed=1)
    assert not np.any(tr.phase)


def test_wiener_requires_f2_segment():
    with pytest.raises(ValueError):
        gen_wiener_trace(PhaseNoisePsd(white_floor=-100.0), FS, 100, seed=0)
    with pytest.raises(ValueError):
        gen_white_trace(PhaseNoisePsd(f2_anchor=(1e6, -90.0)), FS, 100, seed=0)


def test_traces_deterministic():
    psd = PhaseNoisePsd(f2_anchor=(1e6, -90.0))
    a = gen_wiener_trace(psd, FS, 5000, seed=7).phase
    b = gen_wiener_trace(psd, FS, 5000, seed=7).phase
    assert np.array_equal(a, b)
    assert not np.array_equal(a, gen_wiener_trace(psd, FS, 5000, seed=8).phase)


def test_phase_trace_is_unwrapped_and_validated():
    tr = PhaseTrace(FS, np.linspace(0, 20, 10))
    assert tr.phase.max() == 20
    with pytest.raises(ValueError):
        PhaseTrace(FS, [])
    with pytest.raises(ValueError):
        PhaseTrace(0.0, [1.0])


def test_wiener_periodogram_at_1mhz():
    psd = PhaseNoisePsd(f2_anchor=(1e6, -90.0))
    rng = np.random.default_rng(11)
    traces = np.stack([gen_wiener_trace(psd, FS, 2**15, rng).phase for _ in range(100)])
    f, L = welch_ssb(traces, FS)
    f_band, db = band_db(f, L, 0.5e6, 5e6)
    target = psd_eval(psd, f_band)
    assert np.max(np.abs(db - target)) < 1.0
    at_1mhz = np.interp(1e6, f_band, db)
    assert at_1mhz == pytest.approx(-90.0, abs=1.0)


def test_white_variance_and_flatness():
    psd = PhaseNoisePsd(white_floor=-140.0)
    tr = gen_white_trace(psd, FS, 10**6, seed=3)
    assert tr.phase.var() == pytest.approx(2e-5, rel=0.01)
    f, L = welch_ssb(tr.phase.reshape(100, -1), FS, nperseg=2**12, detrend=False)
    _, db = band_db(f, L, 1e5, 1e8)
    assert np.max(np.abs(db + 140.0)) < 1.0
    assert not np.any(gen_white_trace(PhaseNoisePsd(white_floor=-math.inf), FS, 10).phase)


PLL = PllParams(100e6, 60e9, 1e6, PhaseNoisePsd(white_floor=-140.0),
                PhaseNoisePsd(f2_anchor=(1e6, -90.0)))


def test_pll_params_validation():
    with pytest.raises(ValueError):
        PllParams(100e6, 50e6, 1e6)
    with pytest.raises(ValueError):
        PllParams(100e6, 60e9, 20e6)


def test_pll_transfer_asymptotes():
    ref, vco = pll_transfer(PLL, PLL.loop_bandwidth / 1000)
    assert ref == pytest.approx(PLL.ratio, rel=0.01)
    assert vco < 0.01
    ref, vco = pll_transfer(PLL, PLL.loop_bandwidth * 1000)
    assert vco == pytest.approx(1.0, rel=0.01)
    assert ref / PLL.ratio < 0.01


@given(bw=st.floats(1e3, 5e6), zeta=st.floats(0.3, 2.0))
def test_crossover_within_factor_two(bw, zeta):
    p = PllParams(100e6, 60e9, bw, damping=zeta)
    f = np.logspace(math.log10(bw) - 2, math.log10(bw) + 2, 4001)
    ref, vco = pll_transfer(p, f)
    fc = f[np.argmin(np.abs(ref / p.ratio - vco))]
    assert bw / 2 <= fc <= 2 * bw


def test_crossover_factor_at_default_damping():
    assert crossover_factor(1 / math.sqrt(2)) == pytest.approx(math.sqrt(1 + math.sqrt(2)))


def test_output_psd_equal_contributions_at_bandwidth():
    ref_psd = refer_to_output(PLL.ref_psd, PLL.f_ref, PLL.f_out)
    f = PLL.loop_bandwidth
    ref, vco = pll_transfer(PLL, f)
    ref_part = (ref / PLL.ratio) ** 2 * ref_psd.linear(f)
    vco_part = vco**2 * PLL.vco_psd.linear(f)
    assert abs(10 * math.log10(ref_part / vco_part)) < 10


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), scale=st.floats(-5, 5))
def test_pll_filter_is_linear(seed, scale):
    rng = np.random.default_rng(seed)
    a, b, c, d = (PhaseTrace(FS, rng.standard_normal(4096)) for _ in range(4))
    lhs = pll_filter_traces(PLL, a + PhaseTrace(FS, scale * b.phase), c + d).phase
    rhs = (pll_filter_traces(PLL, a, c).phase
           + scale * pll_filter_traces(PLL, b, PhaseTrace(FS, np.zeros(4096))).phase
           + pll_filter_traces(PLL, PhaseTrace(FS, np.zeros(4096)), d).phase)
    assert np.allclose(lhs, rhs, atol=1e-9 * (1 + np.abs(rhs).max()))


def test_pll_filter_rejects_mismatch():
    with pytest.raises(ValueError):
        pll_filter_traces(PLL, PhaseTrace(FS, np.zeros(10)), PhaseTrace(FS, np.zeros(11)))
    with pytest.raises(ValueError):
        pll_filter_traces(PLL, PhaseTrace(FS, np.zeros(10)), PhaseTrace(FS / 2, np.zeros(10)))


def test_reference_offset_settles_to_ratio():
    delta = 1e-3
    n = settle_samples(PLL.loop_bandwidth, FS) * 3
    out = pll_filter_traces(PLL, PhaseTrace(FS, np.full(n, delta)),
                            PhaseTrace(FS, np.zeros(n))).phase
    assert out[-1] == pytest.approx(PLL.ratio * delta, rel=1e-3)


def test_vco_only_output_matches_highpass():
    p = PllParams(100e6, 60e9, 2e6, vco_psd=PhaseNoisePsd(f2_anchor=(1e6, -90.0)))
    rng = np.random.default_rng(5)
    n = 2**15
    raw = np.stack([gen_wiener_trace(p.vco_psd, FS, n, rng).phase for _ in range(100)])
    zero = PhaseTrace(FS, np.zeros(n))
    out = np.stack([pll_filter_traces(p, zero, PhaseTrace(FS, r)).phase for r in raw])
    f, L = welch_ssb(out[:, 4096:], FS, nperseg=2**13)
    f_band, db = band_db(f, L, 0.5e6, 20e6)
    _, hp = loop_response(p.wn, p.damping, f_band)
    expected = 10 * np.log10(np.abs(hp) ** 2 * p.vco_psd.linear(f_band))
    assert np.max(np.abs(db - expected)) < 1.0


def _integrated_error(bw, n=2**16, reps=8):
    p = PllParams(100e6, 60e9, bw, PhaseNoisePsd(white_floor=-140.0),
                  PhaseNoisePsd(f2_anchor=(1e6, -90.0)))
    rng = np.random.default_rng(0)
    warm = settle_samples(bw, FS)
    total = 0.0
    for _ in range(reps):
        ref = PhaseTrace(FS, rng.standard_normal(n + warm) * math.sqrt(2e-14 * FS / 2))
        vco = gen_wiener_trace(p.vco_psd, FS, n + warm, rng)
        total += pll_filter_traces(p, ref, vco).phase[warm:].var()
    return total / reps


def test_integrated_error_has_interior_minimum():
    bws = [1e4, 3e5, 5e6]
    err = [_integrated_error(b) for b in bws]
    assert err[1] < err[0] and err[1] < err[2]


def test_degenerate_cascade_is_multiplication():
    if_pll = PllParams(100e6, 5e9, 300e3)
    mmw = PllParams(5e9, 75e9, 1e6)
    n = 400_000
    t = np.arange(n) / FS
    ref = PhaseTrace(FS, 1e-3 * np.sin(2 * np.pi * 2e3 * t))
    out = cascade_if_pll(if_pll, -math.inf, mmw, FS, n, seed=0, ref_trace=ref).phase
    warm = settle_samples(300e3, FS)
    assert np.allclose(out[warm:], 50 * ref.phase[warm:], atol=1e-3 * 50 * 0.01)


def test_cascade_frequency_plan_mismatch():
    with pytest.raises(ValueError):
        cascade_if_pll(PllParams(100e6, 4e9, 300e3), -135.0, PllParams(5e9, 75e9, 1e6),
                       FS, 100, seed=0)


def test_if_pll_lowers_reference_band_noise():
    xtal = PhaseNoisePsd(white_floor=-140.0)
    if_pll = PllParams(100e6, 5e9, 300e3, xtal, PhaseNoisePsd(f2_anchor=(1e6, -110.0)))
    mmw = PllParams(5e9, 75e9, 1e6)
    n, reps = 2**15, 40
    rng = np.random.default_rng(9)
    warm = settle_samples(300e3, FS)
    cascaded, direct = [], []
    for _ in range(reps):
        x = gen_white_trace(xtal, FS, n + warm, rng)
        cas = cascade_if_pll(if_pll, -135.0, mmw, FS, n + warm, rng, ref_trace=x).phase
        cascaded.append(cas[warm:] * 15)
        direct.append(x.phase[warm:] * 750)
    f, Lc = welch_ssb(np.stack(cascaded), FS, nperseg=2**12)
    _, Ld = welch_ssb(np.stack(direct), FS, nperseg=2**12, detrend=False)
    sel = (f > 1e6) & (f < 100e6)
    assert np.all(Lc[sel] < Ld[sel])
