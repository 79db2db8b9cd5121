"""Symbol-rate uplink simulation, metric extraction, sweeps and SINR-model fits."""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .channel import los_channel, user_angles
from .constellation import Constellation
from .lo_arch import ElementTraceSet, LoArchitecture, element_traces
from .metrics import mean_ci, sinr_db_from_powers
from .phase_noise import PhaseNoisePsd
from .rx_dsp import (
    CarrierRecoveryParams,
    beamform_conj,
    beamform_zf,
    carrier_recovery,
    estimate_channel,
    slow_agc,
)

CHUNK = 16384
LOCK_WINDOW = 1024
LOCK_SER = 0.25


@dataclass(frozen=True)
class SimConfig:
    """One uplink scenario.

    ``thermal_snr`` is the per-element SNR in dB (``None`` disables thermal
    noise). The channel is estimated at the start of every epoch from a
    noiseless pilot burst of ``pilot_symbols`` symbols (0 = instantaneous).
    ``transient`` is the number of symbols dropped from the start of every
    estimation epoch; ``None`` means five CR time constants, limited to
    a tenth of the epoch.
    """

    arch: LoArchitecture
    K: int = 1
    constellation: str = "qpsk"
    symbol_rate: float = 2e9
    cr: Optional[CarrierRecoveryParams] = CarrierRecoveryParams(10e6)
    epoch: float = 1e-4
    n_symbols: int = 200_000
    n_trials: int = 10
    seed: int = 0
    thermal_snr: Optional[float] = None
    user_separation: float = 10.0
    element_spacing: float = 0.5
    beamformer: str = "zf"
    transient: Optional[int] = None
    pilot_symbols: int = 512

    def __post_init__(self):
        if self.K < 1 or self.K > self.arch.M:
            raise ValueError(f"K={self.K} must be in [1, M={self.arch.M}]")
        if self.epoch * self.symbol_rate < 1:
            raise ValueError("epoch must span at least one symbol")
        if self.pilot_symbols < 0:
            raise ValueError("pilot_symbols must be >= 0")
        if self.n_symbols < 1 or self.n_trials < 1:
            raise ValueError("n_symbols and n_trials must be >= 1")
        if self.beamformer not in ("zf", "conj"):
            raise ValueError("beamformer must be 'zf' or 'conj'")
        Constellation.from_name(self.constellation)
        if self.cr is not None:
            self.cr.gains(self.symbol_rate)
            if self.n_symbols < 10 * self.symbol_rate / self.cr.bandwidth:
                warnings.warn(
                    f"n_symbols={self.n_symbols} covers fewer than 10 periods of the "
                    f"{self.cr.bandwidth:g} Hz carrier-recovery loop", RuntimeWarning,
                    stacklevel=2)

    @property
    def M(self) -> int:
        return self.arch.M

    @property
    def epoch_len(self) -> int:
        return int(round(self.epoch * self.symbol_rate))

    @property
    def transient_len(self) -> int:
        if self.transient is not None:
            return int(self.transient)
        if self.cr is None:
            return 0
        span = min(self.epoch_len, self.n_symbols)
        return min(self.cr.settle_samples(self.symbol_rate), span // 10)

    def with_pll_bandwidth(self, bw: float) -> "SimConfig":
        return replace(self, arch=replace(self.arch, mmw_pll=replace(
            self.arch.mmw_pll, loop_bandwidth=bw)))


@dataclass
class TrialResult:
    sig: np.ndarray
    err: np.ndarray
    bit_errors: np.ndarray
    n_bits: np.ndarray
    static_gain: float
    gain_var: float
    phase_var: float
    lock_lost: bool


@dataclass(frozen=True)
class SimMetrics:
    sinr_db: float
    sinr_ci_db: float
    evm: float
    ber: float
    static_gain: float
    gain_var: float
    resid_phase_var: float
    per_user_sinr_db: Tuple[float, ...]
    lock_lost: bool
    n_trials: int

    def row(self) -> Dict[str, float]:
        return {
            "sinr_db": self.sinr_db,
            "sinr_ci_db": self.sinr_ci_db,
            "evm": self.evm,
            "ber": self.ber,
            "static_gain": self.static_gain,
            "gain_var": self.gain_var,
            "resid_phase_var": self.resid_phase_var,
            "lock_lost": int(self.lock_lost),
        }


def _beamformer(cfg: SimConfig, H_hat):
    return beamform_zf(H_hat) if cfg.beamformer == "zf" else beamform_conj(H_hat)


def combine(W: np.ndarray, H: np.ndarray, ts: ElementTraceSet, x: np.ndarray,
            start: int, stop: int):
    """Beamformer output and per-user effective self-gain over samples [start, stop).

    Equivalent to ``apply_phase_noise_rx`` without noise, but exploits the fact
    that elements sharing a PLL share a phase: with few groups the output is
    sum_g e^{j phi_g} C_g x where C_g = W[:, g] H[g, :].
    """
    K = W.shape[0]
    G = ts.vco.shape[0]
    group_of = ts.group_of
    xhat = np.empty((K, stop - start), dtype=complex)
    gain = np.empty((K, stop - start), dtype=complex)
    grouped = G * K < 2 * ts.M
    if grouped:
        C = np.stack([W[:, group_of == g] @ H[group_of == g, :] for g in range(G)])
        diag = np.einsum("gkk->kg", C)
    else:
        diag = (W * H.T)
    for s in range(start, stop, CHUNK):
        e = min(s + CHUNK, stop)
        E = np.exp(1j * (ts.vco[:, s:e] + ts.common[s:e]))
        xs = x[:, s:e]
        if grouped:
            acc = np.zeros((K, e - s), dtype=complex)
            for g in range(G):
                acc += E[g] * (C[g] @ xs)
            xhat[:, s - start:e - start] = acc
            gain[:, s - start:e - start] = diag @ E
        else:
            Ee = E[group_of]
            xhat[:, s - start:e - start] = W @ ((H @ xs) * Ee)
            gain[:, s - start:e - start] = diag @ Ee
    return xhat, gain


def pilot_phase(ts: ElementTraceSet, start: int, stop: int) -> np.ndarray:
    """Per-element LO phase seen by a pilot burst: angle of the mean phasor."""
    g = np.angle(np.exp(1j * (ts.vco[:, start:stop] + ts.common[start:stop])).mean(axis=1))
    return g[ts.group_of]


def run_trial(cfg: SimConfig, trial: int) -> TrialResult:
    ss = np.random.SeedSequence([cfg.seed, trial])
    pn_ss, data_ss, noise_ss = ss.spawn(3)
    T, fs, K = cfg.n_symbols, cfg.symbol_rate, cfg.K
    const = Constellation.from_name(cfg.constellation)

    ts = element_traces(cfg.arch, T, fs, pn_ss)
    H = los_channel(cfg.M, user_angles(K, cfg.user_separation), cfg.element_spacing).entries
    data_rng = np.random.default_rng(data_ss)
    bits = const.random_bits(data_rng, (K, T))
    x = const.modulate(bits)
    noise_rng = np.random.default_rng(noise_ss)
    sigma2 = 0.0 if cfg.thermal_snr is None else 10.0 ** (-cfg.thermal_snr / 10.0)

    L = cfg.epoch_len
    xhat = np.empty((K, T), dtype=complex)
    gain = np.empty((K, T), dtype=complex)
    noise_var = np.zeros((K, T))
    for s in range(0, T, L):
        e = min(s + L, T)
        est_phase = pilot_phase(ts, s, min(s + max(cfg.pilot_symbols, 1), e))
        W = _beamformer(cfg, estimate_channel(H, est_phase))
        xhat[:, s:e], gain[:, s:e] = combine(W, H, ts, x, s, e)
        if sigma2 > 0:
            # diag(e^{j phi}) n has the statistics of n, so W n is drawn directly.
            cov = sigma2 * (W @ W.conj().T)
            chol = np.linalg.cholesky(cov)
            w = noise_rng.standard_normal((K, e - s)) + 1j * noise_rng.standard_normal((K, e - s))
            xhat[:, s:e] += chol @ w * math.sqrt(0.5)
            noise_var[:, s:e] = np.real(np.diag(cov))[:, None]

    keep = np.ones(T, dtype=bool)
    for s in range(0, T, L):
        keep[s:s + cfg.transient_len] = False

    sig = np.zeros(K)
    err = np.zeros(K)
    bit_err = np.zeros(K, dtype=np.int64)
    n_bits = np.zeros(K, dtype=np.int64)
    lock_lost = False
    bps = const.bits_per_symbol
    for k in range(K):
        y = np.empty(T, dtype=complex)
        for s in range(0, T, L):
            y[s:s + L] = slow_agc(xhat[k, s:s + L], 1.0, noise_var[k, s])
        if cfg.cr is not None:
            y, _ = carrier_recovery(y, cfg.cr, const, fs, epoch_len=L)
        yk, xk = y[keep], x[k, keep]
        c = np.vdot(xk, yk) / np.vdot(xk, xk)
        sig[k] = np.mean(np.abs(xk) ** 2)
        err[k] = np.mean(np.abs(yk / c - xk) ** 2)
        rx_bits = const.demodulate(yk)
        tx_bits = bits[k].reshape(T, bps)[keep].ravel()
        wrong = rx_bits != tx_bits
        bit_err[k] = np.count_nonzero(wrong)
        n_bits[k] = wrong.size
        sym_wrong = wrong.reshape(-1, bps).any(axis=1)
        n_win = sym_wrong.size // LOCK_WINDOW
        if n_win:
            ser = sym_wrong[:n_win * LOCK_WINDOW].reshape(n_win, LOCK_WINDOW).mean(axis=1)
            lock_lost |= bool(np.any(ser > LOCK_SER))

    g = gain[:, keep]
    mean_g = g.mean(axis=1, keepdims=True)
    mag = np.abs(g)
    return TrialResult(
        sig=sig, err=err, bit_errors=bit_err, n_bits=n_bits,
        static_gain=float(np.mean(np.abs(mean_g))),
        gain_var=float(np.mean(mag.var(axis=1) / mag.mean(axis=1) ** 2)),
        phase_var=float(np.mean(np.angle(g * np.conj(mean_g)).var(axis=1))),
        lock_lost=lock_lost,
    )


def _trial_job(args):
    cfg, trial = args
    return run_trial(cfg, trial)


def aggregate(results: Sequence[TrialResult]) -> SimMetrics:
    sig = np.array([r.sig for r in results])
    err = np.array([r.err for r in results])
    per_trial = [sinr_db_from_powers(s.sum(), e.sum()) for s, e in zip(sig, err)]
    _, ci = mean_ci(per_trial)
    total_sig, total_err = sig.sum(), err.sum()
    return SimMetrics(
        sinr_db=sinr_db_from_powers(total_sig, total_err),
        sinr_ci_db=ci,
        evm=math.sqrt(total_err / total_sig),
        ber=float(sum(r.bit_errors.sum() for r in results) / sum(r.n_bits.sum() for r in results)),
        static_gain=float(np.mean([r.static_gain for r in results])),
        gain_var=float(np.mean([r.gain_var for r in results])),
        resid_phase_var=float(np.mean([r.phase_var for r in results])),
        per_user_sinr_db=tuple(sinr_db_from_powers(s, e)
                               for s, e in zip(sig.sum(axis=0), err.sum(axis=0))),
        lock_lost=any(r.lock_lost for r in results),
        n_trials=len(results),
    )


def run_uplink(cfg: SimConfig, jobs: int = 1) -> SimMetrics:
    """All trials of ``cfg``; trial t is seeded by (cfg.seed, t) so results do not depend on ``jobs``."""
    tasks = [(cfg, t) for t in range(cfg.n_trials)]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_trial_job, tasks))
    else:
        results = [_trial_job(t) for t in tasks]
    return aggregate(results)


def without_phase_noise(arch: LoArchitecture) -> LoArchitecture:
    silent = PhaseNoisePsd()
    mmw = replace(arch.mmw_pll, ref_psd=silent, vco_psd=silent)
    return replace(arch, mmw_pll=mmw, if_stage=None)


# ---------------------------------------------------------------------------
# sweeps

@dataclass(frozen=True)
class Sweep:
    """Sweep rows (parameter columns + metric columns) and the best point."""

    param: str
    rows: List[dict] = field(repr=False)

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.rows])

    @property
    def best(self) -> dict:
        return max(self.rows, key=lambda r: r["sinr_db"])


def _metrics_row(params: dict, m: SimMetrics) -> dict:
    row = dict(params)
    row.update(m.row())
    return row


def sweep_pll_bandwidth(cfg: SimConfig, bw_list: Sequence[float], jobs: int = 1) -> Sweep:
    rows = [_metrics_row({"pll_bw_hz": bw}, run_uplink(cfg.with_pll_bandwidth(bw), jobs))
            for bw in bw_list]
    return Sweep("pll_bw_hz", rows)


def sweep_users(cfg: SimConfig, K_list: Sequence[int], jobs: int = 1) -> Sweep:
    rows = [_metrics_row({"K": K}, run_uplink(replace(cfg, K=K), jobs)) for K in K_list]
    return Sweep("K", rows)


def sweep_subarray(cfg: SimConfig, N_list: Sequence[int],
                   separations: Sequence[float] = (10.0,), jobs: int = 1) -> Sweep:
    rows = []
    for sep in separations:
        for N in N_list:
            c = replace(cfg, arch=replace(cfg.arch, N=N), user_separation=sep)
            rows.append(_metrics_row({"separation_deg": sep, "N": N}, run_uplink(c, jobs)))
    return Sweep("N", rows)


def sinr_model(K, n_p: float, alpha: float, gamma: float, n_t: float = 0.0,
               s_u: float = 1.0):
    """S_u / (N_t + S_u N_p + alpha gamma (K - 1) S_u N_p), linear, equal user powers."""
    K = np.asarray(K, dtype=float)
    return s_u / (n_t + s_u * n_p + alpha * gamma * (K - 1) * s_u * n_p)


@dataclass(frozen=True)
class ModelFit:
    value: Optional[float]
    n_p: float
    predicted_db: np.ndarray
    residual_db: np.ndarray


def _fit_product(K, sinr_db, n_t):
    """Least-squares c in 1/SINR = N_t + N_p + c (K - 1) N_p, N_p from the K=1 point."""
    K = np.asarray(K, dtype=float)
    inv = 10.0 ** (-np.asarray(sinr_db, dtype=float) / 10.0)
    if 1 not in K:
        raise ValueError("the K=1 point is needed to measure N_p")
    n_p = float(inv[K == 1][0] - n_t)
    u = (K - 1) * n_p
    if not np.any(u > 0):
        raise ValueError("need at least one point with K > 1")
    c = float(np.sum((inv - n_t - n_p) * u) / np.sum(u * u))
    return c, n_p


def fit_sinr_model(K, sinr_db, gamma: float, n_t: float = 0.0) -> ModelFit:
    """Fit alpha for a known architecture gamma; alpha is undefined (None) when gamma = 0."""
    c, n_p = _fit_product(K, sinr_db, n_t)
    if gamma == 0:
        pred = sinr_model(K, n_p, 0.0, 0.0, n_t)
        alpha = None
    else:
        alpha = c / gamma
        pred = sinr_model(K, n_p, alpha, gamma, n_t)
    pred_db = 10.0 * np.log10(pred)
    return ModelFit(alpha, n_p, pred_db, np.asarray(sinr_db, dtype=float) - pred_db)


def fit_gamma(K, sinr_db, alpha: float, n_t: float = 0.0) -> ModelFit:
    """Fit gamma for an intermediate architecture given alpha from the LCG fit."""
    c, n_p = _fit_product(K, sinr_db, n_t)
    gamma = c / alpha
    pred_db = 10.0 * np.log10(sinr_model(K, n_p, alpha, gamma, n_t))
    return ModelFit(gamma, n_p, pred_db, np.asarray(sinr_db, dtype=float) - pred_db)


# ---------------------------------------------------------------------------
# BER curves

# post-beamformer SNR threshold (dB) -> CR bandwidth (Hz), per constellation.
# Denser constellations need a cleaner signal before a wide decision-directed
# loop stops slipping.
DEFAULT_CR_POLICY: Dict[str, Tuple[Tuple[float, float], ...]] = {
    "qpsk": ((-math.inf, 1e5), (6.0, 1e6), (12.0, 10e6)),
    "16qam": ((-math.inf, 1e5), (14.0, 3e6), (18.0, 10e6)),
    "64qam": ((-math.inf, 1e5), (23.0, 3e6), (26.0, 10e6)),
    "256qam": ((-math.inf, 1e5), (30.0, 10e6)),
}


def cr_bandwidth_for(post_bf_snr_db: float, rows) -> float:
    """Bandwidth of the last row whose SNR threshold is <= ``post_bf_snr_db``."""
    bw = rows[0][1]
    for threshold, value in rows:
        if post_bf_snr_db >= threshold:
            bw = value
    return bw


def zf_post_snr_db(cfg: SimConfig) -> np.ndarray:
    """Per-user post-ZF SNR (dB) for unit symbol energy and per-element ``thermal_snr``."""
    H = los_channel(cfg.M, user_angles(cfg.K, cfg.user_separation), cfg.element_spacing).entries
    W = _beamformer(cfg, H)
    sigma2 = 10.0 ** (-cfg.thermal_snr / 10.0)
    return -10.0 * np.log10(sigma2 * np.real(np.diag(W @ W.conj().T)))


def theory_ber(cfg: SimConfig) -> float:
    """Phase-noise-free BER averaged over users."""
    const = Constellation.from_name(cfg.constellation)
    return float(np.mean(const.theory_ber(zf_post_snr_db(cfg))))


def ber_curve(cfg: SimConfig, snr_list: Sequence[float], constellations: Sequence[str],
              policy=None, jobs: int = 1) -> Sweep:
    """Sum BER versus per-element thermal SNR, with and without phase noise.

    The CR bandwidth at each point comes from ``policy[constellation]``. The
    phase-noise-free reference is detected coherently with no CR loop: there
    is no phase to track, and a decision-directed loop at low SNR adds
    jitter of its own.
    """
    policy = DEFAULT_CR_POLICY if policy is None else policy
    rows = []
    clean_arch = without_phase_noise(cfg.arch)
    for name in constellations:
        table = policy[Constellation.from_name(name).name]
        for snr in snr_list:
            c = replace(cfg, constellation=name, thermal_snr=snr)
            post = float(np.mean(zf_post_snr_db(c)))
            bw = cr_bandwidth_for(post, table)
            c_pn = c if cfg.cr is None else replace(c, cr=replace(cfg.cr, bandwidth=bw))
            with_pn = run_uplink(c_pn, jobs)
            without = run_uplink(replace(c, arch=clean_arch, cr=None), jobs)
            rows.append({
                "constellation": name, "thermal_snr_db": snr, "post_bf_snr_db": post,
                "cr_bw_hz": bw, "ber_pn": with_pn.ber, "ber_no_pn": without.ber,
                "ber_theory": theory_ber(c), "sinr_db_pn": with_pn.sinr_db,
                "lock_lost": int(with_pn.lock_lost),
            })
    return Sweep("thermal_snr_db", rows)
