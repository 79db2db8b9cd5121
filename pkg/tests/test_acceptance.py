"""Acceptance suite: one PASS/FAIL line per criterion.

Run directly (``python3 tests/test_acceptance.py``) or through pytest; the
status lines are printed even when pytest captures output.
"""
import math
import time
import warnings
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from losim import cli, presets, sim
from losim.config import from_dict
from losim.lo_arch import architecture_gamma
from losim.phase_noise import (
    PhaseNoisePsd,
    PllParams,
    gen_white_trace,
    gen_wiener_trace,
    pll_filter_traces,
    settle_samples,
)
from losim.power_model import PowerModelParams, sweep_power
from losim.rx_dsp import array_sum_stats, coherent_gain_predict

from oracles import band_db, ber_16qam, ber_qpsk, welch_ssb

pytestmark = pytest.mark.slow

FS = 2e9


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\n[criterion {n:2d}] {'PASS' if ok else 'FAIL'}  {detail}", flush=True)
    return emit


@pytest.fixture(autouse=True)
def _quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        yield


TABLE = {
    "RF": (-96.0, 98.4, 0.0, 0.0, 28.4),
    "mmw1": (-76.0, 112.0, 0.0, 0.0, 62.0),
    "mmw2": (-76.0, 112.0, 21.0, 12.0, 28.9),
}
TABLE_KEYS = ("noise_power_dbm", "path_loss_db", "bs_gain_db", "ue_gain_db", "ue_tx_power_dbm")


def test_c01_link_budget(report, tmp_path):
    t = time.perf_counter()
    assert cli.run(from_dict({"experiment": "link-budget"}), tmp_path) == 0
    elapsed = time.perf_counter() - t
    rows = {r["column"]: r for r in cli.read_csv(tmp_path / "link-budget.csv")}
    worst = 0.0
    for col, want in TABLE.items():
        for key, w in zip(TABLE_KEYS, want):
            worst = max(worst, abs(rows[col][key] - w))
    ok = worst <= 0.1 and elapsed < 1.0
    report(1, ok, f"max |row - table| = {worst:.3f} dB, {elapsed:.2f} s")
    assert ok


def test_c02_power_model(report):
    t = time.perf_counter()
    big = sweep_power(PowerModelParams())
    small = sweep_power(PowerModelParams(M=16, D_X=16.0, D_Y=16.0))
    elapsed = time.perf_counter() - t
    tot = big.total_W
    lcg_db = 10 * math.log10(tot[0] / big.min_W)
    ccg_db = 10 * math.log10(tot[-1] / big.min_W)
    spread = 10 * math.log10(small.total_W.max() / small.min_W)
    interior = 1 < big.argmin < 128
    ok = interior and lcg_db >= 7 and ccg_db >= 7 and spread < 3 and elapsed < 1
    report(2, ok, f"M=128 argmin N={big.argmin}, N=1 +{lcg_db:.2f} dB, N=128 +{ccg_db:.2f} dB "
                  f"(need >= 7); M=16 spread {spread:.2f} dB")
    assert ok


def _pn_check(kind, level, bw, seed):
    rng = np.random.default_rng(seed)
    n = 2**15
    if kind == "wiener":
        psd = PhaseNoisePsd(f2_anchor=(1e6, level))
        traces = np.stack([gen_wiener_trace(psd, FS, n, rng).phase for _ in range(100)])
        target = psd.linear
        detrend = "linear"
    elif kind == "white":
        psd = PhaseNoisePsd(white_floor=level)
        traces = np.stack([gen_white_trace(psd, FS, n, rng).phase for _ in range(100)])
        target = psd.linear
        detrend = False
    else:
        p = PllParams(100e6, 75e9, bw, PhaseNoisePsd(white_floor=level - 10),
                      PhaseNoisePsd(f2_anchor=(1e6, level + 50)))
        warm = settle_samples(bw, FS)
        rows = []
        for _ in range(100):
            ref = gen_white_trace(p.ref_psd, FS, n + warm, rng)
            vco = gen_wiener_trace(p.vco_psd, FS, n + warm, rng)
            rows.append(pll_filter_traces(p, ref, vco).phase[warm:])
        traces = np.stack(rows)
        target = p.output_psd
        detrend = "linear"
    f, L = welch_ssb(traces, FS, nperseg=2**13, detrend=detrend)
    fb, db = band_db(f, L, 0.5e6, 5e6)
    return float(np.max(np.abs(db - 10 * np.log10(target(fb)))))


def test_c03_psd_fidelity(report):
    worst = []

    @settings(max_examples=9, deadline=None, derandomize=True)
    @given(kind=st.sampled_from(["wiener", "white", "pll"]), level=st.floats(-140, -80),
           bw=st.sampled_from([1e5, 1e6, 5e6]), seed=st.integers(0, 2**31))
    def check(kind, level, bw, seed):
        err = _pn_check(kind, level, bw, seed)
        worst.append((err, kind))
        assert err < 1.0

    t = time.perf_counter()
    try:
        check()
        ok = True
    except AssertionError:
        ok = False
    err, kind = max(worst)
    report(3, ok, f"{len(worst)} trace types/levels x 100 realizations, worst {err:.2f} dB "
                  f"({kind}) over 0.5-5 MHz, {time.perf_counter() - t:.0f} s")
    assert ok


def test_c04_cr_benefit(report):
    lines, ok = [], True
    for pll_bw in (1e6, 100e3):
        wide = sim.run_uplink(presets.cr_benefit_config(-85.0, pll_bw, 10e6, n_trials=10))
        narrow = sim.run_uplink(presets.cr_benefit_config(-85.0, pll_bw, 10e3, n_trials=10))
        gain = wide.sinr_db - narrow.sinr_db
        ok &= gain >= 10
        lines.append(f"PLL {pll_bw / 1e3:g} kHz: {wide.sinr_db:.1f} vs {narrow.sinr_db:.1f} dB "
                     f"(+{gain:.1f})")
    report(4, ok, "; ".join(lines))
    assert ok


def test_c05_optimum_shift(report):
    grid = [1e4, 10**4.5, 1e5, 10**5.5, 1e6, 10**6.5]
    best = []
    for level in (-85.0, -95.0, -105.0):
        cfg = presets.cr_benefit_config(level, 1e5, 10e3, n_trials=4)
        s = sim.sweep_pll_bandwidth(cfg, grid)
        best.append(s.best["pll_bw_hz"])
    ok = all(b2 >= b1 for b1, b2 in zip(best, best[1:]))
    report(5, ok, "argmax PLL BW at ref -85/-95/-105 dBc/Hz: "
                  + ", ".join(f"{b / 1e3:.0f} kHz" for b in best))
    assert ok


def test_c06_self_interference(report):
    rng = np.random.default_rng(6)
    M, worst_db, worst_var = 16, 0.0, 0.0
    for sigma in (0.05, 0.1, 0.2, 0.3):
        phi = rng.normal(0.0, sigma, (M, 100_000))
        stats = array_sum_stats(phi)
        worst_db = max(worst_db, abs(20 * math.log10(
            stats["static_gain"] / coherent_gain_predict(sigma**2))))
        worst_var = max(worst_var, abs(stats["phase_var"] / (sigma**2 / M) - 1))
    ok = worst_db < 0.1 and worst_var < 0.1
    report(6, ok, f"static gain error {worst_db:.4f} dB, var(theta) error {100 * worst_var:.1f}%")
    assert ok


K_LIST = [1, 2, 4, 8, 16]


def test_c07_multiuser_fit(report):
    base = presets.multiuser_config(128, 1, 1, pll_bw=5e6, n_trials=5)
    lcg = sim.sweep_users(base, K_LIST)
    ccg = sim.sweep_users(replace(base, arch=replace(base.arch, N=128)), K_LIST)
    y_l, y_c = lcg.column("sinr_db"), ccg.column("sinr_db")
    fit = sim.fit_sinr_model(K_LIST, y_l, architecture_gamma(base.arch))
    flat = np.ptp(y_c) <= 1.0
    decreasing = bool(np.all(np.diff(y_l) < 0))
    alpha_ok = 1.0 <= fit.value <= 4.0
    resid = float(np.max(np.abs(fit.residual_db)))
    ok = flat and decreasing and alpha_ok and resid < 1.0
    report(7, ok, f"CCG span {np.ptp(y_c):.2f} dB; LCG {np.round(y_l, 2).tolist()} dB; "
                  f"alpha={fit.value:.2f} (gamma=1), max residual {resid:.2f} dB")
    assert ok


def test_c08_subarray(report):
    cfg = presets.multiuser_config(128, 1, 16, n_trials=3, n_symbols=100_000)
    Ns = [1, 2, 4, 8, 16, 32, 64, 128]
    s = sim.sweep_subarray(cfg, Ns, separations=(10.0,))
    y = s.column("sinr_db")
    monotone = bool(np.all(np.diff(y) >= -0.5))
    gap = y[-1] - y[Ns.index(32)]
    ok = monotone and gap <= 2.0
    report(8, ok, f"SINR vs N {np.round(y, 2).tolist()} dB; N=32 is {gap:.2f} dB below N=128")
    assert ok


def test_c09_flagship(report):
    m = sim.run_uplink(presets.flagship_config(n_trials=5))
    ok = abs(m.sinr_db - 36.0) <= 2.0
    report(9, ok, f"M=128, N=32, K=16, VCO -84 dBc/Hz: SINR {m.sinr_db:.2f} "
                  f"+/- {m.sinr_ci_db:.2f} dB")
    assert ok


def test_c10_ber_sanity(report):
    arch = presets.array_arch(16, 4)
    cfg = sim.SimConfig(arch, K=4, n_symbols=100_000, n_trials=2)
    oracles = {"qpsk": ber_qpsk, "16qam": ber_16qam}
    s = sim.ber_curve(cfg, [-9.0, -6.0, -3.0, 0.0, 3.0, 6.0], list(oracles))
    checked, worst, ok = 0, 0.0, True
    # the clean reference runs without CR, so no transient symbols are dropped
    for r in s.rows:
        post = sim.zf_post_snr_db(replace(cfg, thermal_snr=r["thermal_snr_db"]))
        p = float(np.mean(oracles[r["constellation"]](post)))
        if p < 1e-4:
            continue
        bps = 2 if r["constellation"] == "qpsk" else 4
        n_bits = cfg.n_trials * cfg.K * cfg.n_symbols * bps
        z = abs(r["ber_no_pn"] - p) / math.sqrt(p * (1 - p) / n_bits)
        worst = max(worst, z)
        ok &= z <= 3.0
        checked += 1
    ok &= checked >= 4
    report(10, ok, f"{checked} points with BER >= 1e-4, worst deviation {worst:.2f} sigma")
    assert ok


SMALL = {
    "lo": {"M": 16, "N": 4},
    "sim": {"K": 2, "n_symbols": 8192, "n_trials": 2, "epoch_s": 2e-6},
    "sweep": {"K": [1, 2], "N": [1, 4, 16], "pll_bw_hz": [1e6, 5e6],
              "thermal_snr_db": [0.0, 10.0], "constellations": ["qpsk", "16qam"]},
}


def test_c11_determinism(report, tmp_path):
    same = []
    for exp in cli.RUNNERS:
        cfg = from_dict({**SMALL, "experiment": exp, "seed": 3})
        outs = []
        for d in ("a", "b"):
            assert cli.run(cfg, tmp_path / d) == 0
            outs.append((tmp_path / d / f"{exp}.csv").read_bytes())
        same.append(outs[0] == outs[1])
    ok = all(same)
    report(11, ok, f"{sum(same)}/{len(same)} experiments byte-identical on rerun")
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v", "-p", "no:cacheprovider"]))
