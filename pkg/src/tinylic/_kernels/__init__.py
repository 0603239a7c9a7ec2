"""Hot-kernel dispatch.

Selects the numba or pure-numpy implementation once at import time (see
``tinylic.backend``). Both implementations are bit-identical; tests in
``tests/test_backend_equivalence.py`` enforce that.
"""

import numpy as np

from .. import backend

if backend.USE_NUMBA:
    from . import numba_impl as _impl
else:
    from . import numpy_impl as _impl


def _f64(x):
    return np.ascontiguousarray(x, dtype=np.float64)


def exp_vec(x):
    x = _f64(x)
    return _impl.exp_core(x.ravel()).reshape(x.shape)


def gelu_vec(x):
    x = _f64(x)
    return _impl.gelu_core(x.ravel()).reshape(x.shape)


def softplus_vec(x):
    x = _f64(x)
    return _impl.softplus_core(x.ravel()).reshape(x.shape)


def conv2d_core(xp, w, b, stride):
    return _impl.conv2d_core(_f64(xp), _f64(w), _f64(b), stride)


def tconv2d_core(y, w, b, stride):
    return _impl.tconv2d_core(_f64(y), _f64(w), _f64(b), stride)


def linear_core(x2, w, b):
    return _impl.linear_core(_f64(x2), _f64(w), _f64(b))


def layer_norm_core(x, gamma, beta, eps):
    return _impl.layer_norm_core(_f64(x), _f64(gamma), _f64(beta), float(eps))


def na_core(q, k, v, bias, window):
    return _impl.na_core(_f64(q), _f64(k), _f64(v), _f64(bias), int(window))


def gaussian_cdf_rows(sigmas):
    return _impl.gaussian_cdf_rows(_f64(sigmas))


def rc_encode_bytes(symbols, rows):
    symbols = np.ascontiguousarray(symbols, dtype=np.int64)
    rows = np.ascontiguousarray(rows, dtype=np.int64)
    buf, n = _impl.rc_encode_core(symbols, rows)
    return bytes(buf[:n])


def rc_decode_syms(data, rows, n):
    data = np.frombuffer(bytes(data), dtype=np.uint8)
    rows = np.ascontiguousarray(rows, dtype=np.int64)
    return _impl.rc_decode_core(data, rows, int(n))
