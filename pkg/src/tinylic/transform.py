"""Transform stack: neighborhood attention, residual blocks, and the
analysis/synthesis pairs.

Each coder stage is an integrated convolution/self-attention unit: a
stride-2 resampling convolution plus a stack of residual neighborhood
attention blocks (RNABs). The main coder stacks four such units (x16
spatial reduction), the hyper coder two more (x4). Decoders run the
mirror image: blocks first, then a stride-2 transposed convolution.

An RNAB is pre-norm residual: ``u = x + NA(LN1(x)); y = u + MLP(LN2(u))``
where NA is window-clamped neighborhood attention with learned relative
positional bias and the MLP is FC - GELU - FC. Flatten/unflatten between
the (H, W, C) map and token form are exact reshapes.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .config import MAIN_STAGES, ModelConfig
from .errors import ConfigError, ShapeError
from .tensor_ops import ConvKernel, as_tensor, conv2d, gelu, linear, tconv2d

#: Padded image dims must divide this (x16 main, x4 hyper resampling).
SPATIAL_MULTIPLE = 64


@dataclass(frozen=True)
class NAParams:
    q_w: np.ndarray
    q_b: np.ndarray
    k_w: np.ndarray
    k_b: np.ndarray
    v_w: np.ndarray
    v_b: np.ndarray
    out_w: np.ndarray
    out_b: np.ndarray
    pos_bias: np.ndarray  # (heads, 2w-1, 2w-1)
    heads: int
    window: int


@dataclass(frozen=True)
class RnabParams:
    ln1_gamma: np.ndarray
    ln1_beta: np.ndarray
    na: NAParams
    ln2_gamma: np.ndarray
    ln2_beta: np.ndarray
    fc1_w: np.ndarray
    fc1_b: np.ndarray
    fc2_w: np.ndarray
    fc2_b: np.ndarray


@dataclass(frozen=True)
class IcsaParams:
    resample: ConvKernel
    blocks: tuple


def neighborhood_attention(x, p: NAParams):
    """Window-clamped multi-head self-attention.

    Every query attends to exactly min(w,H) * min(w,W) neighbors; the
    window shifts inward at borders. The learned positional bias is
    indexed by the relative offset (di, dj) in [-(w-1), w-1]^2.
    """
    x = as_tensor(x, "attention input")
    h, w_, c = x.shape
    if p.q_w.shape != (c, c):
        raise ConfigError(
            f"attention projections expect {p.q_w.shape[0]} channels, input has {c}"
        )
    if c % p.heads:
        raise ConfigError(f"channels {c} not divisible by heads {p.heads}")
    if p.window < 1 or p.window % 2 == 0:
        raise ConfigError(f"window must be odd, got {p.window}")
    d = c // p.heads
    flat = x.reshape(h * w_, c)
    q = _kernels.linear_core(flat, p.q_w, p.q_b).reshape(h, w_, p.heads, d)
    k = _kernels.linear_core(flat, p.k_w, p.k_b).reshape(h, w_, p.heads, d)
    v = _kernels.linear_core(flat, p.v_w, p.v_b).reshape(h, w_, p.heads, d)
    att = _kernels.na_core(q, k, v, p.pos_bias, p.window)
    merged = att.reshape(h * w_, c)
    return _kernels.linear_core(merged, p.out_w, p.out_b).reshape(h, w_, c)


def rnab_forward(x, p: RnabParams):
    """Pre-norm residual block: attention then MLP, both skipped."""
    x = as_tensor(x, "rnab input")
    h, w_, c = x.shape
    u = x + neighborhood_attention(
        _kernels.layer_norm_core(x, p.ln1_gamma, p.ln1_beta, 1e-5), p.na
    )
    t = _kernels.layer_norm_core(u, p.ln2_gamma, p.ln2_beta, 1e-5)
    t = _kernels.linear_core(t.reshape(h * w_, c), p.fc1_w, p.fc1_b)
    t = gelu(t)
    t = _kernels.linear_core(t, p.fc2_w, p.fc2_b).reshape(h, w_, c)
    return u + t


def icsa_forward(x, p: IcsaParams, direction):
    """One coder stage: resample + blocks (down) or blocks + resample (up)."""
    if direction == "down":
        x = conv2d(x, p.resample)
        for blk in p.blocks:
            x = rnab_forward(x, blk)
        return x
    if direction == "up":
        for blk in p.blocks:
            x = rnab_forward(x, blk)
        return tconv2d(x, p.resample)
    raise ConfigError(f"direction must be 'down' or 'up', got {direction!r}")


def _na_params(ws, prefix, cfg):
    return NAParams(
        q_w=ws[f"{prefix}.q_proj.weight"],
        q_b=ws[f"{prefix}.q_proj.bias"],
        k_w=ws[f"{prefix}.k_proj.weight"],
        k_b=ws[f"{prefix}.k_proj.bias"],
        v_w=ws[f"{prefix}.v_proj.weight"],
        v_b=ws[f"{prefix}.v_proj.bias"],
        out_w=ws[f"{prefix}.out_proj.weight"],
        out_b=ws[f"{prefix}.out_proj.bias"],
        pos_bias=ws[f"{prefix}.pos_bias"],
        heads=cfg.heads,
        window=cfg.window,
    )


def _rnab_params(ws, prefix, cfg):
    return RnabParams(
        ln1_gamma=ws[f"{prefix}.ln1.gamma"],
        ln1_beta=ws[f"{prefix}.ln1.beta"],
        na=_na_params(ws, f"{prefix}.na", cfg),
        ln2_gamma=ws[f"{prefix}.ln2.gamma"],
        ln2_beta=ws[f"{prefix}.ln2.beta"],
        fc1_w=ws[f"{prefix}.mlp.fc1.weight"],
        fc1_b=ws[f"{prefix}.mlp.fc1.bias"],
        fc2_w=ws[f"{prefix}.mlp.fc2.weight"],
        fc2_b=ws[f"{prefix}.mlp.fc2.bias"],
    )


def stage_params(ws, cfg, side, stage):
    """IcsaParams for one stage of main_enc/main_dec/hyper_enc/hyper_dec."""
    prefix = f"{side}.stage{stage}"
    kern = ConvKernel(
        ws[f"{prefix}.resample.weight"], ws[f"{prefix}.resample.bias"], stride=2
    )
    blocks = tuple(
        _rnab_params(ws, f"{prefix}.rnab{j}", cfg)
        for j in range(1, cfg.depths[stage - 1] + 1)
    )
    return IcsaParams(resample=kern, blocks=blocks)


def analysis(x, ws, cfg: ModelConfig):
    """Main encoder transform: (H, W, 3) -> (H/16, W/16, C_y)."""
    x = as_tensor(x, "analysis input")
    if x.shape[2] != 3:
        raise ShapeError(f"analysis expects RGB input, got {x.shape[2]} channels")
    if x.shape[0] % SPATIAL_MULTIPLE or x.shape[1] % SPATIAL_MULTIPLE:
        raise ShapeError(
            f"analysis input dims must be multiples of {SPATIAL_MULTIPLE} "
            f"(pad first), got {x.shape[:2]}"
        )
    for stage in range(1, MAIN_STAGES + 1):
        x = icsa_forward(x, stage_params(ws, cfg, "main_enc", stage), "down")
    return x


def synthesis(y_hat, ws, cfg: ModelConfig):
    """Mirrored decoder transform: (h, w, C_y) -> (16h, 16w, 3) in [0, 1]."""
    y_hat = as_tensor(y_hat, "synthesis input")
    if y_hat.shape[2] != cfg.latent_channels:
        raise ShapeError(
            f"synthesis expects {cfg.latent_channels} channels, got {y_hat.shape[2]}"
        )
    x = y_hat
    for stage in range(MAIN_STAGES, 0, -1):
        x = icsa_forward(x, stage_params(ws, cfg, "main_dec", stage), "up")
    return np.clip(x, 0.0, 1.0)


def hyper_analysis(y, ws, cfg: ModelConfig):
    """Hyper encoder: (h, w, C_y) -> (h/4, w/4, C_z)."""
    y = as_tensor(y, "hyper_analysis input")
    if y.shape[2] != cfg.latent_channels:
        raise ShapeError(
            f"hyper_analysis expects {cfg.latent_channels} channels, got {y.shape[2]}"
        )
    if y.shape[0] % 4 or y.shape[1] % 4:
        raise ShapeError(f"hyper_analysis needs dims divisible by 4, got {y.shape[:2]}")
    x = y
    for stage in (MAIN_STAGES + 1, MAIN_STAGES + 2):
        x = icsa_forward(x, stage_params(ws, cfg, "hyper_enc", stage), "down")
    return x


def hyper_synthesis(z_hat, ws, cfg: ModelConfig):
    """Hyper decoder: (h/4, w/4, C_z) -> hyper features (h, w, 2*C_y)."""
    z_hat = as_tensor(z_hat, "hyper_synthesis input")
    if z_hat.shape[2] != cfg.hyper_latent_channels:
        raise ShapeError(
            f"hyper_synthesis expects {cfg.hyper_latent_channels} channels, "
            f"got {z_hat.shape[2]}"
        )
    x = z_hat
    for stage in (MAIN_STAGES + 2, MAIN_STAGES + 1):
        x = icsa_forward(x, stage_params(ws, cfg, "hyper_dec", stage), "up")
    return x
