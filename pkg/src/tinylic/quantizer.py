"""Uniform quantization with the per-image quality scaling factor.

The scaling factor multiplies the latent before quantization, trading
rate for distortion inside a single model; it travels in the bitstream
header as unsigned Q8.8 fixed point, and the encoder always works with
the fixed-point-rounded value so both sides agree exactly.

Symbols are mean-centered residuals, s = round(y*sf - mu), rounded half
away from zero and clamped to the coder support [-64, 64]; clamping is
lossy but counted. The hyper latent reuses the same quantizer with mu=0
and sf=1.
"""

from dataclasses import dataclass

import numpy as np

from .entropy import SYMBOL_BOUND
from .errors import InputError, ShapeError


@dataclass(frozen=True)
class QualityFactor:
    """Quality scaling factor stored as unsigned Q8.8 fixed point."""

    fixed: int

    def __post_init__(self):
        if not 1 <= self.fixed <= 0xFFFF:
            raise InputError(
                f"quality factor out of Q8.8 range [1/256, 255+255/256]: "
                f"fixed={self.fixed}"
            )

    @classmethod
    def from_float(cls, sf):
        sf = float(sf)
        fixed = int(round(sf * 256.0))
        if not 1 <= fixed <= 0xFFFF:
            raise InputError(f"quality factor {sf} outside [1/256, 255+255/256]")
        return cls(fixed)

    @property
    def value(self):
        """Exact float value (dyadic, so float64 represents it exactly)."""
        return self.fixed / 256.0


@dataclass
class SymbolPlane:
    """Integer symbols on the latent's geometry plus a clamp diagnostic."""

    symbols: np.ndarray
    clamped: int = 0


def apply_sf(y, q: QualityFactor):
    """Scale the latent elementwise; the inverse divides by sf."""
    return np.asarray(y, dtype=np.float64) * q.value


def quantize_residual(y_scaled, mu) -> SymbolPlane:
    """s = round(y_scaled - mu), half away from zero, clamped to support."""
    y_scaled = np.asarray(y_scaled, dtype=np.float64)
    mu = np.asarray(mu, dtype=np.float64)
    if y_scaled.shape != mu.shape:
        raise ShapeError(f"shape mismatch: {y_scaled.shape} vs {mu.shape}")
    d = y_scaled - mu
    s = np.floor(np.abs(d) + 0.5) * np.sign(d)
    clamped = int(np.count_nonzero(np.abs(s) > SYMBOL_BOUND))
    s = np.clip(s, -SYMBOL_BOUND, SYMBOL_BOUND)
    return SymbolPlane(symbols=s.astype(np.int64), clamped=clamped)


def dequantize(plane, mu, q: QualityFactor):
    """Reconstruct the latent: (s + mu) / sf."""
    symbols = plane.symbols if isinstance(plane, SymbolPlane) else np.asarray(plane)
    mu = np.asarray(mu, dtype=np.float64)
    if symbols.shape != mu.shape:
        raise ShapeError(f"shape mismatch: {symbols.shape} vs {mu.shape}")
    return (symbols.astype(np.float64) + mu) / q.value
