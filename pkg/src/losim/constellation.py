"""Gray-mapped square QAM, unit average energy."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import erfc

_NAMES = {"qpsk": 4, "4qam": 4, "16qam": 16, "64qam": 64, "256qam": 256}


def _gray(n: np.ndarray) -> np.ndarray:
    return n ^ (n >> 1)


@dataclass(frozen=True)
class Constellation:
    order: int

    def __post_init__(self):
        L = math.isqrt(self.order)
        if L * L != self.order or L < 2 or L & (L - 1):
            raise ValueError(f"unsupported square QAM order {self.order}")

    @classmethod
    def from_name(cls, name: str) -> "Constellation":
        key = name.lower().replace("-", "").replace("_", "")
        if key not in _NAMES:
            raise ValueError(f"unknown constellation {name!r}; choose from {sorted(_NAMES)}")
        return cls(_NAMES[key])

    @property
    def name(self) -> str:
        return "qpsk" if self.order == 4 else f"{self.order}qam"

    @property
    def levels(self) -> int:
        """PAM levels per axis."""
        return math.isqrt(self.order)

    @property
    def bits_per_axis(self) -> int:
        return int(math.log2(self.levels))

    @property
    def bits_per_symbol(self) -> int:
        return 2 * self.bits_per_axis

    @property
    def unit(self) -> float:
        """Half the minimum distance for unit average symbol energy."""
        L = self.levels
        return math.sqrt(3.0 / (2.0 * (L * L - 1)))

    @property
    def points(self) -> np.ndarray:
        return _points(self.order)

    def axis_bits(self, idx: np.ndarray) -> np.ndarray:
        """Gray label bits (MSB first) of PAM level indices, shape (..., bits_per_axis)."""
        g = _gray(np.asarray(idx, dtype=np.int64))
        shifts = np.arange(self.bits_per_axis - 1, -1, -1)
        return ((g[..., None] >> shifts) & 1).astype(np.uint8)

    def modulate(self, bits: np.ndarray) -> np.ndarray:
        """Bits (..., n_sym * bits_per_symbol) -> symbols (..., n_sym)."""
        b = np.asarray(bits, dtype=np.int64)
        k = self.bits_per_axis
        b = b.reshape(b.shape[:-1] + (-1, 2, k))
        weights = 1 << np.arange(k - 1, -1, -1)
        gray = (b * weights).sum(axis=-1)
        idx = _gray_inverse(gray, k)
        amp = (2 * idx - (self.levels - 1)) * self.unit
        return amp[..., 0] + 1j * amp[..., 1]

    def slice_index(self, y: np.ndarray):
        """Nearest PAM level indices (I, Q) of received symbols."""
        L = self.levels
        def axis(v):
            return np.clip(np.rint((v / self.unit + (L - 1)) / 2.0), 0, L - 1).astype(np.int64)
        return axis(np.real(y)), axis(np.imag(y))

    def decide(self, y: np.ndarray) -> np.ndarray:
        i, q = self.slice_index(y)
        L = self.levels
        return ((2 * i - (L - 1)) + 1j * (2 * q - (L - 1))) * self.unit

    def demodulate(self, y: np.ndarray) -> np.ndarray:
        """Hard decisions -> bits (..., n_sym * bits_per_symbol)."""
        i, q = self.slice_index(y)
        bits = np.concatenate([self.axis_bits(i), self.axis_bits(q)], axis=-1)
        return bits.reshape(bits.shape[:-2] + (-1,))

    def random_bits(self, rng: np.random.Generator, shape) -> np.ndarray:
        shape = tuple(np.atleast_1d(shape))
        return rng.integers(0, 2, size=shape[:-1] + (shape[-1] * self.bits_per_symbol,),
                            dtype=np.uint8)

    def theory_ber(self, snr_db) -> np.ndarray:
        """Exact AWGN bit error rate at symbol SNR ``snr_db`` (Es/N0).

        Per axis, sums the probability mass landing in every decision region
        whose Gray label differs in each bit.
        """
        snr = 10.0 ** (np.asarray(snr_db, dtype=float) / 10.0)
        sigma = np.sqrt(1.0 / (2.0 * snr))
        L, d = self.levels, self.unit
        idx = np.arange(L)
        labels = self.axis_bits(idx)
        centres = (2 * idx - (L - 1)) * d
        lo = np.concatenate([[-np.inf], centres[:-1] + d])
        hi = np.concatenate([centres[1:] - d, [np.inf]])
        ber = np.zeros_like(snr)
        for i in range(L):
            for j in range(L):
                if i == j:
                    continue
                flips = int(np.sum(labels[i] != labels[j]))
                a, b = (lo[j] - centres[i]) / sigma, (hi[j] - centres[i]) / sigma
                # regions below the sent level: use the lower tail to avoid 1 - 1 cancellation
                p = _q(-b) - _q(-a) if j < i else _q(a) - _q(b)
                ber = ber + flips * p
        return ber / (L * self.bits_per_axis)


def _q(x):
    return 0.5 * erfc(np.asarray(x) / math.sqrt(2.0))


def _gray_inverse(g: np.ndarray, nbits: int) -> np.ndarray:
    n = g.copy()
    shift = 1
    while shift < nbits:
        n ^= n >> shift
        shift <<= 1
    return n


@lru_cache(maxsize=None)
def _points(order: int) -> np.ndarray:
    c = Constellation(order)
    L = c.levels
    idx = np.arange(L)
    amp = (2 * idx - (L - 1)) * c.unit
    pts = (amp[:, None] + 1j * amp[None, :]).ravel()
    pts.setflags(write=False)
    return pts
