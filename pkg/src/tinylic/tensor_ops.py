"""Dense tensor kernels used by every transform stage.

Tensors are plain float64 ndarrays of shape (H, W, C), row-major. All
operations are pure functions: same inputs give bitwise-identical outputs,
and nothing non-finite may enter or leave.

Convolutions use replicate (edge) padding of (k-1)//2 per border, so a
constant field stays constant through any kernel that sums to one. The
accumulation order inside every kernel is fixed (ky, kx, ci ascending,
bias last) to keep outputs reproducible across runs and backends.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ConfigError, InputError, ShapeError


def as_tensor(x, name="tensor"):
    """Validate and return x as a finite float64 (H, W, C) array."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim != 3:
        raise ShapeError(f"{name} must be rank-3 (H, W, C), got shape {x.shape}")
    if x.shape[0] < 1 or x.shape[1] < 1 or x.shape[2] < 1:
        raise ShapeError(f"{name} dimensions must be positive, got {x.shape}")
    if not np.isfinite(x).all():
        raise InputError(f"{name} contains non-finite values")
    return x


@dataclass(frozen=True)
class ConvKernel:
    """Weights (k, k, C_in, C_out), bias (C_out,), stride 1 or 2."""

    weights: np.ndarray
    bias: np.ndarray
    stride: int = 1

    def __post_init__(self):
        w = np.ascontiguousarray(self.weights, dtype=np.float64)
        b = np.ascontiguousarray(self.bias, dtype=np.float64)
        if w.ndim != 4 or w.shape[0] != w.shape[1]:
            raise ConfigError(f"kernel weights must be (k, k, C_in, C_out), got {w.shape}")
        if w.shape[0] % 2 != 1:
            raise ConfigError(f"kernel size must be odd, got {w.shape[0]}")
        if self.stride not in (1, 2):
            raise ConfigError(f"stride must be 1 or 2, got {self.stride}")
        if b.shape != (w.shape[3],):
            raise ShapeError(f"bias shape {b.shape} does not match C_out={w.shape[3]}")
        if not (np.isfinite(w).all() and np.isfinite(b).all()):
            raise InputError("kernel parameters contain non-finite values")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)

    @property
    def k(self):
        return self.weights.shape[0]

    @property
    def c_in(self):
        return self.weights.shape[2]

    @property
    def c_out(self):
        return self.weights.shape[3]

    def transposed(self):
        """Same kernel with C_in and C_out swapped (for adjoint checks)."""
        return ConvKernel(self.weights.transpose(0, 1, 3, 2).copy(),
                          np.zeros(self.c_in), self.stride)


def conv2d(x, kernel):
    """Strided convolution with replicate padding.

    Output shape (ceil(H/s), ceil(W/s), C_out).
    """
    x = as_tensor(x, "conv2d input")
    if x.shape[2] != kernel.c_in:
        raise ShapeError(
            f"conv2d channel mismatch: input has {x.shape[2]}, kernel expects {kernel.c_in}"
        )
    p = (kernel.k - 1) // 2
    xp = np.pad(x, ((p, p), (p, p), (0, 0)), mode="edge") if p else x
    return _kernels.conv2d_core(xp, kernel.weights, kernel.bias, kernel.stride)


def tconv2d(x, kernel):
    """Transposed convolution: the exact adjoint of conv2d.

    Output shape (H*s, W*s, C_out). For zero biases,
    <conv2d(x, K), y> == <x, tconv2d(y, K.transposed())>.
    """
    x = as_tensor(x, "tconv2d input")
    if x.shape[2] != kernel.c_in:
        raise ShapeError(
            f"tconv2d channel mismatch: input has {x.shape[2]}, kernel expects {kernel.c_in}"
        )
    return _kernels.tconv2d_core(x, kernel.weights, kernel.bias, kernel.stride)


def layer_norm(x, gamma, beta, eps=1e-5):
    """Normalize each spatial position over channels, then scale and shift."""
    x = as_tensor(x, "layer_norm input")
    gamma = np.ascontiguousarray(gamma, dtype=np.float64)
    beta = np.ascontiguousarray(beta, dtype=np.float64)
    if gamma.shape != (x.shape[2],) or beta.shape != (x.shape[2],):
        raise ShapeError(
            f"layer_norm gamma/beta must have length C={x.shape[2]}, "
            f"got {gamma.shape} and {beta.shape}"
        )
    return _kernels.layer_norm_core(x, gamma, beta, eps)


def gelu(x):
    """Exact erf-based GELU: x * Phi(x)."""
    return _kernels.gelu_vec(np.asarray(x, dtype=np.float64))


def softmax_last(x):
    """Softmax over the last axis, max-subtracted for overflow safety."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.shape[-1] < 1:
        raise ShapeError("softmax needs at least one element")
    m = x[..., 0].copy()
    for n in range(1, x.shape[-1]):
        np.maximum(m, x[..., n], out=m)
    e = _kernels.exp_vec(x - m[..., None])
    den = e[..., 0].copy()
    for n in range(1, x.shape[-1]):
        den += e[..., n]
    return e / den[..., None]


def linear(x, weight, bias):
    """Affine map over the last axis: (..., C_in) -> (..., C_out)."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    weight = np.ascontiguousarray(weight, dtype=np.float64)
    bias = np.ascontiguousarray(bias, dtype=np.float64)
    if weight.ndim != 2 or x.shape[-1] != weight.shape[0]:
        raise ShapeError(
            f"linear dims disagree: input {x.shape[-1]} vs weight {weight.shape}"
        )
    if bias.shape != (weight.shape[1],):
        raise ShapeError(f"linear bias shape {bias.shape} vs C_out {weight.shape[1]}")
    lead = x.shape[:-1]
    out = _kernels.linear_core(x.reshape(-1, weight.shape[0]), weight, bias)
    return out.reshape(*lead, weight.shape[1])
