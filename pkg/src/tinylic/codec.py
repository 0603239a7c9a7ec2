"""End-to-end encode/decode pipelines and rate-distortion reporting.

Encode: pad, run the analysis transform, code the hyper latent under the
factorized model, synthesize hyper features, then code the scaled latent
through the multistage context model. The encoder also runs its own
reconstruction, which the decoder reproduces bitwise (compared as 8-bit
samples) because both sides compute entropy parameters from identical
context state.
"""

from dataclasses import dataclass

import numpy as np

from . import bitstream as bsmod
from .bitstream import Bitstream
from .config import ModelConfig
from .context import mcm_compress, mcm_decompress
from .entropy import SYMBOL_BOUND, build_cdf, estimate_rate, factorized_pmf
from .errors import FormatError, InputError
from .image import crop_to, pad_image, to_uint8
from .quantizer import QualityFactor, apply_sf, quantize_residual
from .rangecoder import rc_decode, rc_encode
from .transform import analysis, hyper_analysis, hyper_synthesis, synthesis
from .weights import WeightStore


@dataclass(frozen=True)
class RdReport:
    rate_bits: float
    rate_bits_actual: int
    bpp: float
    mse: float
    psnr_db: float
    lam: float
    j_cost: float

    def lines(self):
        return [
            f"rate_bits: {self.rate_bits:.3f}",
            f"rate_bits_actual: {self.rate_bits_actual}",
            f"bpp: {self.bpp:.6f}",
            f"mse: {self.mse:.6f}",
            f"psnr_db: {self.psnr_db if self.psnr_db != float('inf') else 'inf'}",
            f"lambda: {self.lam}",
            f"j_cost: {self.j_cost:.3f}",
        ]


@dataclass(frozen=True)
class EncodeResult:
    bitstream: Bitstream
    reconstruction: np.ndarray  # encoder-side x-tilde, 8-bit, original dims
    rate_estimate_bits: float
    z_rate_bits: float
    y_rate_bits: float
    y_clamped: int
    z_clamped: int


def rd_cost(rate_bits, mse_value, lam, pixels):
    """J = rate + lambda * distortion (reporting only, never optimized)."""
    if rate_bits < 0 or mse_value < 0 or lam < 0 or pixels < 0:
        raise InputError("rd_cost arguments must be non-negative")
    return float(rate_bits) + float(lam) * float(mse_value) * float(pixels)


def _z_tables(ws: WeightStore, cfg: ModelConfig):
    loc = ws["factorized.loc"]
    scale = ws["factorized.scale"]
    return [
        build_cdf(factorized_pmf(loc[c], scale[c]))
        for c in range(cfg.hyper_latent_channels)
    ]


def _z_rows(tables, n_positions):
    per_pos = np.stack([t.cum for t in tables])
    return np.tile(per_pos, (n_positions, 1))


def encode_image(img, cfg: ModelConfig, ws: WeightStore, sf=1.0) -> EncodeResult:
    """Compress an (H, W, 3) uint8 image into a TLIC bitstream."""
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise InputError(f"expected (H, W, 3) image, got {img.shape}")
    q = QualityFactor.from_float(sf)
    orig_h, orig_w = img.shape[:2]
    x = pad_image(img)

    y = analysis(x, ws, cfg)
    z = hyper_analysis(y, ws, cfg)

    # hyper latent: plain rounding (mu = 0, sf = 1), factorized model
    z_plane = quantize_residual(z, np.zeros_like(z))
    tables = _z_tables(ws, cfg)
    zh, zw, c_z = z_plane.symbols.shape
    z_flat = z_plane.symbols.reshape(-1)
    z_chunk = rc_encode(z_flat + SYMBOL_BOUND, _z_rows(tables, zh * zw))
    z_rate = estimate_rate(z_plane.symbols, tables)
    z_hat = z_plane.symbols.astype(np.float64)

    psi = hyper_synthesis(z_hat, ws, cfg)
    y_scaled = apply_sf(y, q)
    streams, _, y_hat_scaled, y_rate, y_clamped = mcm_compress(y_scaled, psi, ws, cfg)

    x_tilde = synthesis(y_hat_scaled / q.value, ws, cfg)
    recon = to_uint8(crop_to(x_tilde, orig_h, orig_w))

    bs = Bitstream(
        width=orig_w,
        height=orig_h,
        sf_fixed=q.fixed,
        config_id=cfg.config_id,
        z_chunk=z_chunk,
        y_chunks=tuple(streams),
    )
    return EncodeResult(
        bitstream=bs,
        reconstruction=recon,
        rate_estimate_bits=z_rate + y_rate,
        z_rate_bits=z_rate,
        y_rate_bits=y_rate,
        y_clamped=y_clamped,
        z_clamped=z_plane.clamped,
    )


def decode_image(bs, cfg: ModelConfig, ws: WeightStore) -> np.ndarray:
    """Decompress a TLIC bitstream into an (H, W, 3) uint8 image."""
    if isinstance(bs, (bytes, bytearray, memoryview)):
        bs = bsmod.parse(bs)
    if bs.config_id != cfg.config_id:
        raise FormatError(
            f"bitstream was coded with config id {bs.config_id}, "
            f"decoder has {cfg.config_id}"
        )
    q = QualityFactor(bs.sf_fixed)
    pad_h = -(-bs.height // 64) * 64
    pad_w = -(-bs.width // 64) * 64
    yh, yw = pad_h // 16, pad_w // 16
    zh, zw = yh // 4, yw // 4
    c_z = cfg.hyper_latent_channels

    tables = _z_tables(ws, cfg)
    z_flat = rc_decode(bs.z_chunk, _z_rows(tables, zh * zw), zh * zw * c_z)
    z_hat = (z_flat - SYMBOL_BOUND).reshape(zh, zw, c_z).astype(np.float64)

    psi = hyper_synthesis(z_hat, ws, cfg)
    _, y_hat_scaled = mcm_decompress(list(bs.y_chunks), psi, ws, cfg)

    x_tilde = synthesis(y_hat_scaled / q.value, ws, cfg)
    return to_uint8(crop_to(x_tilde, bs.height, bs.width))


def make_report(img, cfg, ws, sf=1.0, lam=0.01) -> RdReport:
    """Encode, decode, and summarize rate and distortion."""
    from .image import mse as mse_fn
    from .image import psnr as psnr_fn

    result = encode_image(img, cfg, ws, sf=sf)
    blob = bsmod.serialize(result.bitstream)
    decoded = decode_image(blob, cfg, ws)
    if not np.array_equal(decoded, result.reconstruction):
        raise FormatError("decoder output diverged from encoder reconstruction")
    pixels = img.shape[0] * img.shape[1]
    actual_bits = 8 * len(blob)
    m = mse_fn(img, decoded)
    return RdReport(
        rate_bits=result.rate_estimate_bits,
        rate_bits_actual=actual_bits,
        bpp=actual_bits / pixels,
        mse=m,
        psnr_db=psnr_fn(img, decoded),
        lam=lam,
        j_cost=rd_cost(actual_bits, m, lam, pixels),
    )
