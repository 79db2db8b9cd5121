"""SINR/EVM/BER extraction."""
from __future__ import annotations

import math

import numpy as np
from scipy import stats

SINR_CAP_DB = 100.0


def scalar_fit(rx: np.ndarray, tx: np.ndarray) -> complex:
    """Complex c minimising |rx - c tx|^2."""
    tx = np.asarray(tx)
    return complex(np.vdot(tx, rx) / np.vdot(tx, tx))


def error_powers(rx: np.ndarray, tx: np.ndarray):
    """(signal power, error power) after the optimal complex scalar fit."""
    rx, tx = np.asarray(rx), np.asarray(tx)
    if rx.shape != tx.shape:
        raise ValueError(f"length mismatch: {rx.shape} vs {tx.shape}")
    c = scalar_fit(rx, tx)
    sig = float(np.mean(np.abs(tx) ** 2))
    err = float(np.mean(np.abs(rx / c - tx) ** 2)) if c != 0 else math.inf
    return sig, err


def sinr_db_from_powers(sig: float, err: float) -> float:
    if err <= sig * 10.0 ** (-SINR_CAP_DB / 10.0):
        return SINR_CAP_DB
    return 10.0 * math.log10(sig / err)


def measure_sinr(rx: np.ndarray, tx: np.ndarray) -> float:
    """EVM-based SINR in dB, capped at 100 dB."""
    return sinr_db_from_powers(*error_powers(rx, tx))


def measure_evm(rx: np.ndarray, tx: np.ndarray) -> float:
    sig, err = error_powers(rx, tx)
    return math.sqrt(err / sig)


def measure_ber(rx_bits: np.ndarray, tx_bits: np.ndarray) -> float:
    rx_bits, tx_bits = np.asarray(rx_bits), np.asarray(tx_bits)
    if rx_bits.shape != tx_bits.shape:
        raise ValueError(f"length mismatch: {rx_bits.shape} vs {tx_bits.shape}")
    return float(np.count_nonzero(rx_bits != tx_bits) / rx_bits.size)


def mean_ci(values, level: float = 0.95):
    """Mean and half-width of a Student-t confidence interval."""
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        return float(v.mean()), math.nan
    half = stats.t.ppf(0.5 + level / 2, v.size - 1) * v.std(ddof=1) / math.sqrt(v.size)
    return float(v.mean()), float(half)
