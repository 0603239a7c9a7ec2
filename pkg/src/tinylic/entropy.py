"""Probability models and integer CDF tables for the range coder.

Latent symbols live on the integer support [-64, 64] (129 values). Symbol
probabilities come from either a discretized zero-mean Gaussian (scale
predicted by the context model) or a per-channel logistic factorized
model (hyper latents). Tail mass beyond +-63.5 is folded into the edge
symbols, so every pmf sums to one by construction.

Tables quantize pmfs to 16-bit integer frequencies (total 65536) with a
floor-then-largest-remainder rule and a minimum frequency of one, which
keeps every symbol codable. Tables are rebuilt identically on the decoder
from the same (mu, sigma) values; the scalar math is evaluated in a fixed
order so encoder and decoder can never disagree.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._kernels import numpy_impl as _np_impl
from .errors import InputError

#: Symbols span [-SYMBOL_BOUND, SYMBOL_BOUND].
SYMBOL_BOUND = 64
NUM_SYMBOLS = 2 * SYMBOL_BOUND + 1
CDF_TOTAL = 1 << 16

#: Scale floor; prevents near-one-hot pmfs from amplifying float noise.
SIGMA_MIN = 0.04

_INV_SQRT2 = 1.0 / math.sqrt(2.0)


def _phi(t):
    return 0.5 * math.erf(t * _INV_SQRT2) + 0.5


def _sigmoid(t):
    if t >= 0.0:
        return 1.0 / (1.0 + math.exp(-t))
    e = math.exp(t)
    return e / (1.0 + e)


def gaussian_pmf(sigma):
    """Discretized zero-mean Gaussian over the 129-symbol support.

    P(s) = Phi((s+0.5)/sigma) - Phi((s-0.5)/sigma) for |s| < 64, with the
    remaining tail mass folded into -64 and +64. sigma is floored at
    SIGMA_MIN first.
    """
    sigma = max(float(sigma), SIGMA_MIN)
    pmf = np.empty(NUM_SYMBOLS)
    prev = 0.0
    for t in range(1, NUM_SYMBOLS):
        c = _phi((t - (SYMBOL_BOUND + 0.5)) / sigma)
        pmf[t - 1] = c - prev
        prev = c
    pmf[NUM_SYMBOLS - 1] = 1.0 - prev
    return pmf


def factorized_pmf(loc, scale):
    """Logistic-distribution pmf over integer bins centered at loc."""
    loc = float(loc)
    scale = float(scale)
    if scale <= 0.0:
        raise InputError(f"factorized scale must be positive, got {scale}")
    pmf = np.empty(NUM_SYMBOLS)
    prev = 0.0
    for t in range(1, NUM_SYMBOLS):
        c = _sigmoid(((t - (SYMBOL_BOUND + 0.5)) - loc) / scale)
        pmf[t - 1] = c - prev
        prev = c
    pmf[NUM_SYMBOLS - 1] = 1.0 - prev
    return pmf


@dataclass(frozen=True)
class CdfTable:
    """Cumulative integer frequencies: cum[0] = 0, cum[-1] = 65536.

    The codec uses 130-entry tables (129 symbols); other sizes are allowed
    for generic range-coder use. Strict monotonicity means every symbol
    has frequency >= 1.
    """

    cum: np.ndarray

    def __post_init__(self):
        cum = np.ascontiguousarray(self.cum, dtype=np.int64)
        if cum.ndim != 1 or cum.shape[0] < 2:
            raise InputError(f"cdf table needs >= 2 entries, got shape {cum.shape}")
        if cum[0] != 0 or cum[-1] != CDF_TOTAL:
            raise InputError(
                f"cdf table must run from 0 to {CDF_TOTAL}, got [{cum[0]}, {cum[-1]}]"
            )
        if not np.all(np.diff(cum) >= 1):
            raise InputError("cdf table must be strictly increasing")
        object.__setattr__(self, "cum", cum)

    @property
    def num_symbols(self):
        return self.cum.shape[0] - 1

    def freq(self, idx):
        """Frequency of the symbol at 0-based index idx."""
        return int(self.cum[idx + 1] - self.cum[idx])


def build_cdf(pmf):
    """Quantize a pmf into a CdfTable.

    Floor scaling to 16 bits, largest-remainder top-up (remainder ties go
    to the largest index), then minimum frequency 1 enforced by stealing
    from the currently largest bin (ties again to the largest index).
    """
    pmf = np.ascontiguousarray(pmf, dtype=np.float64)
    if pmf.ndim != 1 or pmf.shape[0] < 1:
        raise InputError("pmf must be a non-empty vector")
    if np.any(pmf < 0.0) or not np.isfinite(pmf).all():
        raise InputError("pmf entries must be finite and non-negative")
    total = float(pmf.sum())
    if abs(total - 1.0) > 1e-9:
        raise InputError(f"pmf must sum to 1 within 1e-9, got {total!r}")
    freq = np.empty(pmf.shape[0], dtype=np.int64)
    _np_impl.quantize_pmf_into(pmf, freq)
    cum = np.empty(pmf.shape[0] + 1, dtype=np.int64)
    cum[0] = 0
    np.cumsum(freq, out=cum[1:])
    return CdfTable(cum)


def gaussian_cdf_rows(sigmas):
    """Batched (N, 130) cumulative tables for zero-mean Gaussians.

    Same construction as build_cdf(gaussian_pmf(sigma)) for each row, on
    the hot-kernel path. Sigmas are floored at SIGMA_MIN.
    """
    sigmas = np.maximum(np.asarray(sigmas, dtype=np.float64).ravel(), SIGMA_MIN)
    return _kernels.gaussian_cdf_rows(sigmas)


def estimate_rate(symbols, tables):
    """Theoretical bits to code the symbols: sum of -log2(freq/65536).

    symbols: integer array of symbol values centered on the table
    (index = value + M//2, so [-64, 64] for the codec's 129-bin tables).
    tables: a single CdfTable shared by all symbols, or one CdfTable per
    channel when symbols is (h, w, c).
    """
    symbols = np.asarray(symbols)
    if isinstance(tables, CdfTable):
        freq = np.diff(tables.cum)
        f = freq[symbols.ravel() + tables.num_symbols // 2]
    else:
        if symbols.ndim != 3 or len(tables) != symbols.shape[2]:
            raise InputError("per-channel tables require (h, w, c) symbols")
        f = np.empty(symbols.size)
        flat = symbols.reshape(-1, symbols.shape[2])
        for c, tab in enumerate(tables):
            freq = np.diff(tab.cum)
            f[c :: symbols.shape[2]] = freq[flat[:, c] + tab.num_symbols // 2]
    return float(np.sum(-np.log2(f / CDF_TOTAL)))


def rate_from_rows(symbols_idx, rows):
    """estimate_rate for per-symbol cumulative rows (indices, not values)."""
    symbols_idx = np.asarray(symbols_idx, dtype=np.int64).ravel()
    rows = np.asarray(rows, dtype=np.int64)
    f = rows[np.arange(symbols_idx.shape[0]), symbols_idx + 1] - rows[
        np.arange(symbols_idx.shape[0]), symbols_idx
    ]
    return float(np.sum(-np.log2(f / CDF_TOTAL)))
