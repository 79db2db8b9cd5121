"""Receive-side DSP: channel estimation, beamforming, carrier recovery, AGC.

Also holds the closed-form self-interference predictors used to check the
Monte Carlo results.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit

from .constellation import Constellation
from .phase_noise import DEFAULT_DAMPING

# natural frequency (Hz) = bandwidth / CR_BW_RATIO
CR_BW_RATIO = 0.786


class IllConditionedError(ValueError):
    pass


def estimate_channel(H: np.ndarray, phase_at_est: np.ndarray) -> np.ndarray:
    """Noiseless per-element estimate: diag(e^{j phi(t_est)}) H."""
    H = np.asarray(H)
    return np.exp(1j * np.asarray(phase_at_est, dtype=float))[:, None] * H


def beamform_conj(H_hat: np.ndarray) -> np.ndarray:
    """Conjugate beamformer with each row scaled for unit nominal gain."""
    Hh = np.asarray(H_hat)
    return Hh.conj().T / np.sum(np.abs(Hh) ** 2, axis=0)[:, None]


def beamform_zf(H_hat: np.ndarray, max_cond: float = 1e8) -> np.ndarray:
    """W = (H^H H)^-1 H^H; raises if the Gram matrix condition number exceeds ``max_cond``."""
    Hh = np.asarray(H_hat)
    gram = Hh.conj().T @ Hh
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond > max_cond:
        raise IllConditionedError(f"Gram matrix condition number {cond:.3g} exceeds {max_cond:.3g}")
    return np.linalg.solve(gram, Hh.conj().T)


def apply_phase_noise_rx(W, H, x, phi_i, n=None, phi_c=None) -> np.ndarray:
    """x_hat[t] = W diag(e^{j(phi_c[t] + phi_i[:, t])}) (H x[t] + n[:, t]).

    ``x`` is (K, T), ``phi_i`` is (M, T), ``phi_c`` is (T,) or None.
    """
    y = np.asarray(H) @ np.asarray(x)
    if n is not None:
        y = y + n
    phase = np.asarray(phi_i, dtype=float)
    if phi_c is not None:
        phase = phase + np.asarray(phi_c, dtype=float)
    return np.asarray(W) @ (np.exp(1j * phase) * y)


@dataclass(frozen=True)
class CarrierRecoveryParams:
    """Decision-directed type-II loop with natural frequency ``bandwidth / 0.786``."""

    bandwidth: float
    damping: float = DEFAULT_DAMPING

    @property
    def wn(self) -> float:
        return 2.0 * math.pi * self.bandwidth / CR_BW_RATIO

    def settle_samples(self, symbol_rate: float, n_tau: float = 5.0) -> int:
        """Symbols spanning ``n_tau`` time constants 1/(zeta wn)."""
        return int(math.ceil(n_tau * symbol_rate / (self.damping * self.wn)))

    def gains(self, symbol_rate: float):
        """Per-symbol proportional and integral gains."""
        if not self.bandwidth < symbol_rate / 20:
            raise ValueError(
                f"CR bandwidth {self.bandwidth:g} Hz must be below symbol_rate/20 "
                f"= {symbol_rate / 20:g} Hz")
        wt = self.wn / symbol_rate
        return 2.0 * self.damping * wt, wt * wt


@njit(cache=True)
def _slice(v, L, unit):
    k = np.rint((v / unit + (L - 1)) / 2.0)
    if k < 0:
        k = 0.0
    elif k > L - 1:
        k = L - 1.0
    return (2.0 * k - (L - 1)) * unit


@njit(cache=True)
def _cr_kernel(y, L, unit, kp, ki, epoch_len, out, phase):
    p = 0.0
    f = 0.0
    for n in range(y.size):
        if epoch_len > 0 and n % epoch_len == 0:
            p = 0.0
        r = y[n] * complex(math.cos(p), -math.sin(p))
        d = complex(_slice(r.real, L, unit), _slice(r.imag, L, unit))
        z = r * d.conjugate()
        e = math.atan2(z.imag, z.real)
        out[n] = r
        phase[n] = p
        f += ki * e
        p += kp * e + f


def carrier_recovery(symbols: np.ndarray, params: CarrierRecoveryParams,
                     constellation: Constellation, symbol_rate: float,
                     epoch_len: int = 0):
    """Decision-directed PLL: proportional path plus two integrators.

    The phase accumulator is re-zeroed every ``epoch_len`` symbols, where a
    fresh channel estimate has already removed the accumulated phase; the
    frequency integrator carries over. Returns ``(corrected, phase_estimate)``.
    """
    y = np.ascontiguousarray(symbols, dtype=np.complex128)
    kp, ki = params.gains(symbol_rate)
    out = np.empty_like(y)
    phase = np.empty(y.size)
    _cr_kernel(y, constellation.levels, constellation.unit, kp, ki, int(epoch_len), out, phase)
    return out, phase


def slow_agc(symbols: np.ndarray, signal_power: float = 1.0, noise_power: float = 0.0,
             window: Optional[int] = None) -> np.ndarray:
    """Divide out the mean gain estimated from RMS power over each ``window``.

    Only the static gain is removed; sample-to-sample gain fluctuation is
    left in place.
    """
    y = np.asarray(symbols)
    n = y.size
    window = n if window is None else int(window)
    out = np.empty_like(y)
    for s in range(0, n, window):
        seg = y[s:s + window]
        p = max(np.mean(np.abs(seg) ** 2) - noise_power, 1e-30)
        out[s:s + window] = seg / math.sqrt(p / signal_power)
    return out


def coherent_gain_predict(variance: float) -> float:
    """|E[e^{j phi}]| for zero-mean Gaussian phi: the characteristic function exp(-var/2)."""
    return math.exp(-0.5 * variance)


def taylor_residuals(phi: np.ndarray):
    """Small-angle phase and gain of the normalised array sum (1/M) sum_i e^{j phi_i}.

    ``phi`` is (M, T); returns ``(theta[t], g[t])`` with theta ~ mean(phi) and
    g ~ mean(1 - phi^2 / 2).
    """
    phi = np.asarray(phi, dtype=float)
    return phi.mean(axis=0), (1.0 - 0.5 * phi**2).mean(axis=0)


def self_interference_ceiling(gain: np.ndarray) -> float:
    """Linear SINR ceiling (mean gain)^2 / var(gain) of a gain sequence."""
    g = np.asarray(gain, dtype=float)
    return float(g.mean() ** 2 / g.var())


def array_sum_stats(phi: np.ndarray):
    """Monte Carlo static gain, gain variance and phase variance of (1/M) sum e^{j phi}."""
    s = np.exp(1j * np.asarray(phi, dtype=float)).mean(axis=0)
    mag = np.abs(s)
    return {
        "static_gain": float(np.abs(s.mean())),
        "gain_var": float(mag.var()),
        "phase_var": float(np.angle(s).var()),
        "magnitude": mag,
    }
