"""Pure-numpy kernels.

Every function here has a numba twin in ``numba_impl``; the two must stay
bit-identical. That forces three rules on this module:

1. Accumulations happen term by term in a documented order (no ``np.sum``,
   no BLAS dot products - their reduction trees differ from a scalar loop).
2. Transcendentals go through libm scalars (``math.exp`` etc.) because
   numpy's SIMD ufuncs round differently in the last ulp.
3. Only IEEE-exact vector ops (+, -, *, /, sqrt, floor, abs, min, max,
   comparisons) are used directly on arrays.

Inputs are assumed validated: float64, C-contiguous, finite.
"""

import math

import numpy as np

_INV_SQRT2 = 1.0 / math.sqrt(2.0)

_erf_vec = np.frompyfunc(math.erf, 1, 1)
_exp_vec = np.frompyfunc(math.exp, 1, 1)
_log1p_vec = np.frompyfunc(math.log1p, 1, 1)


def exp_core(x):
    """Elementwise libm exp."""
    return _exp_vec(x).astype(np.float64)


def gelu_core(x):
    """0.5 * x * (1 + erf(x / sqrt(2))), evaluated in that order."""
    e = _erf_vec(x * _INV_SQRT2).astype(np.float64)
    return (0.5 * x) * (1.0 + e)


def softplus_core(x):
    """log(1 + exp(x)) in the overflow-safe split form."""
    neg = _log1p_vec(exp_core(-np.abs(x))).astype(np.float64)
    return np.where(x > 0.0, x + neg, neg)


def conv2d_core(xp, w, b, stride):
    """Strided valid correlation over a pre-padded input.

    xp: (Hp, Wp, Cin) already replicate-padded by (k-1)//2 per border.
    Accumulation order per output element: ky, kx, ci ascending, bias last.
    """
    k = w.shape[0]
    cin = w.shape[2]
    cout = w.shape[3]
    ho = (xp.shape[0] - k) // stride + 1
    wo = (xp.shape[1] - k) // stride + 1
    out = np.zeros((ho, wo, cout))
    for ky in range(k):
        for kx in range(k):
            win = xp[ky : ky + (ho - 1) * stride + 1 : stride,
                     kx : kx + (wo - 1) * stride + 1 : stride]
            for ci in range(cin):
                out += win[:, :, ci, None] * w[ky, kx, ci]
    out += b
    return out


def tconv2d_core(y, w, b, stride):
    """Adjoint of conv2d_core (replicate padding folded back into edges).

    y: (h, w_, Cin); w: (k, k, Cin, Cout); output (h*stride, w_*stride, Cout).
    Scatter order matches conv2d_core's gather order: ky, kx, ci ascending.
    """
    k = w.shape[0]
    cin = w.shape[2]
    cout = w.shape[3]
    h, w_ = y.shape[0], y.shape[1]
    hs, ws = h * stride, w_ * stride
    p = (k - 1) // 2
    g = np.zeros((hs + 2 * p, ws + 2 * p, cout))
    for ky in range(k):
        for kx in range(k):
            tgt = g[ky : ky + (h - 1) * stride + 1 : stride,
                    kx : kx + (w_ - 1) * stride + 1 : stride]
            for ci in range(cin):
                tgt += y[:, :, ci, None] * w[ky, kx, ci]
    # fold the pad bands back into the edge rows, then edge columns
    rows = g[p : p + hs].copy()
    for t in range(p):
        rows[0] += g[t]
    for t in range(p):
        rows[hs - 1] += g[hs + p + t]
    out = rows[:, p : p + ws].copy()
    for t in range(p):
        out[:, 0] += rows[:, t]
    for t in range(p):
        out[:, ws - 1] += rows[:, ws + p + t]
    out += b
    return out


def linear_core(x2, w, b):
    """Affine map on flattened positions: (N, Cin) @ (Cin, Cout) + b.

    Accumulates over ci ascending, bias last.
    """
    n = x2.shape[0]
    cin, cout = w.shape
    out = np.zeros((n, cout))
    for ci in range(cin):
        out += x2[:, ci, None] * w[ci]
    out += b
    return out


def layer_norm_core(x, gamma, beta, eps):
    """Per-position channel normalization with affine, x: (H, W, C)."""
    c = x.shape[2]
    mean = x[:, :, 0].copy()
    for ci in range(1, c):
        mean += x[:, :, ci]
    mean /= float(c)
    d0 = x[:, :, 0] - mean
    var = d0 * d0
    for ci in range(1, c):
        d = x[:, :, ci] - mean
        var += d * d
    var /= float(c)
    inv = 1.0 / np.sqrt(var + eps)
    out = np.empty_like(x)
    for ci in range(c):
        out[:, :, ci] = ((x[:, :, ci] - mean) * inv) * gamma[ci] + beta[ci]
    return out


def na_core(q, k, v, bias, window):
    """Neighborhood attention over clamped w x w windows.

    q, k, v: (H, W, nh, d); bias: (nh, 2*window-1, 2*window-1).
    Each query attends to min(window,H) * min(window,W) neighbors; the
    window shifts inward at borders so the neighbor count is constant.
    """
    h, w_, nh, d = q.shape
    wh = min(window, h)
    ww = min(window, w_)
    off = (window - 1) // 2
    scale = 1.0 / math.sqrt(d)
    nwin = wh * ww

    i0 = np.arange(h) - off
    np.clip(i0, 0, h - wh, out=i0)
    j0 = np.arange(w_) - off
    np.clip(j0, 0, w_ - ww, out=j0)
    rows = i0[:, None] + np.arange(wh)[None, :]          # (H, wh)
    cols = j0[:, None] + np.arange(ww)[None, :]          # (W, ww)

    # gather neighbors: (H, W, nh, wh*ww, d), neighbor index row-major
    kn = k[rows[:, None, :, None], cols[None, :, None, :]]
    kn = kn.transpose(0, 1, 4, 2, 3, 5).reshape(h, w_, nh, nwin, d)
    vn = v[rows[:, None, :, None], cols[None, :, None, :]]
    vn = vn.transpose(0, 1, 4, 2, 3, 5).reshape(h, w_, nh, nwin, d)

    scores = np.zeros((h, w_, nh, nwin))
    for dd in range(d):
        scores += q[:, :, :, None, dd] * kn[:, :, :, :, dd]
    scores = scores * scale

    di = rows - np.arange(h)[:, None] + (window - 1)     # (H, wh)
    dj = cols - np.arange(w_)[:, None] + (window - 1)    # (W, ww)
    bblk = bias[:, di[:, None, :, None], dj[None, :, None, :]]
    bblk = bblk.transpose(1, 2, 0, 3, 4).reshape(h, w_, nh, nwin)
    scores = scores + bblk

    m = scores[:, :, :, 0].copy()
    for n in range(1, nwin):
        np.maximum(m, scores[:, :, :, n], out=m)
    e = exp_core(scores - m[:, :, :, None])
    den = e[:, :, :, 0].copy()
    for n in range(1, nwin):
        den += e[:, :, :, n]
    num = np.zeros((h, w_, nh, d))
    for n in range(nwin):
        num += e[:, :, :, n, None] * vn[:, :, :, n]
    return num / den[:, :, :, None]


def _phi(t):
    """Standard normal CDF at t, scalar libm evaluation."""
    return 0.5 * math.erf(t * _INV_SQRT2) + 0.5


def quantize_pmf_into(pmf, freq):
    """Turn one pmf row into integer frequencies totalling 65536.

    Floor scaling, then largest-remainder top-up (ties to the largest
    index), then a minimum frequency of 1 enforced by stealing from the
    currently largest bin (ties again to the largest index).
    """
    m = pmf.shape[0]
    scaled = pmf * 65536.0
    rem = np.empty(m)
    total = 0
    for i in range(m):
        f = int(math.floor(scaled[i]))
        freq[i] = f
        rem[i] = scaled[i] - f
        total += f
    r = 65536 - total
    if r > 0:
        srt = np.sort(rem)
        thr = srt[m - r]
        q = r
        for i in range(m):
            if rem[i] > thr:
                freq[i] += 1
                q -= 1
        for i in range(m - 1, -1, -1):
            if q <= 0:
                break
            if rem[i] == thr:
                freq[i] += 1
                q -= 1
    for i in range(m):
        if freq[i] < 1:
            best = 0
            for t in range(m):
                if freq[t] >= freq[best]:
                    best = t
            freq[i] = 1
            freq[best] -= 1


def gaussian_cdf_rows(sigmas):
    """Integer cumulative tables for zero-mean Gaussians, one per sigma.

    Returns (N, 130) int64: row[0] = 0, row[129] = 65536, symbols -64..64
    with tail mass folded into the edge bins.
    """
    n = sigmas.shape[0]
    out = np.empty((n, 130), dtype=np.int64)
    pmf = np.empty(129)
    freq = np.empty(129, dtype=np.int64)
    for row in range(n):
        s = sigmas[row]
        prev = 0.0
        for t in range(1, 129):
            c = _phi((t - 64.5) / s)
            pmf[t - 1] = c - prev
            prev = c
        pmf[128] = 1.0 - prev
        quantize_pmf_into(pmf, freq)
        out[row, 0] = 0
        acc = 0
        for i in range(129):
            acc += freq[i]
            out[row, i + 1] = acc
    return out


_RC_TOP = 1 << 24
_RC_MASK = 0xFFFFFFFF


def rc_encode_core(symbols, rows):
    """Range-encode symbols[t] under cumulative table rows[t].

    rows: (N, M+1) int64 with rows[:,0]==0 and rows[:,-1]==65536.
    Returns (uint8 buffer, length). Integer arithmetic only.
    """
    n = symbols.shape[0]
    buf = np.empty(2 * n + 16, dtype=np.uint8)
    pos = 0
    low = 0
    rng = 0xFFFFFFFF
    cache = 0
    started = False
    pend = 0

    def shift_low(force):
        nonlocal pos, low, cache, started, pend
        if force or low < 0xFF000000 or low > 0xFFFFFFFF:
            carry = low >> 32
            if started:
                buf[pos] = (cache + carry) & 0xFF
                pos += 1
            while pend > 0:
                buf[pos] = (0xFF + carry) & 0xFF
                pos += 1
                pend -= 1
            cache = (low >> 24) & 0xFF
            started = True
        else:
            pend += 1
        low = (low << 8) & _RC_MASK

    for t in range(n):
        s = symbols[t]
        cl = int(rows[t, s])
        ch = int(rows[t, s + 1])
        r = rng >> 16
        low += cl * r
        rng = (ch - cl) * r
        while rng < _RC_TOP:
            shift_low(False)
            rng <<= 8
    for _ in range(5):
        shift_low(True)
    return buf, pos


def rc_decode_core(data, rows, n):
    """Decode n symbols; returns (symbols, consumed, ok).

    ok=False flags a truncated stream or an out-of-range cumulative
    lookup; callers turn that into a corrupt-stream error.
    """
    out = np.empty(n, dtype=np.int64)
    size = data.shape[0]
    if size < 4:
        return out, 0, False
    code = (int(data[0]) << 24) | (int(data[1]) << 16) | (int(data[2]) << 8) | int(data[3])
    pos = 4
    rng = 0xFFFFFFFF
    m = rows.shape[1] - 1
    for t in range(n):
        r = rng >> 16
        dv = code // r
        if dv >= 65536:
            return out, pos, False
        lo = 0
        hi = m
        while hi - lo > 1:
            mid = (lo + hi) >> 1
            if rows[t, mid] <= dv:
                lo = mid
            else:
                hi = mid
        s = lo
        cl = int(rows[t, s])
        ch = int(rows[t, s + 1])
        code -= cl * r
        rng = (ch - cl) * r
        while rng < _RC_TOP:
            if pos >= size:
                return out, pos, False
            code = ((code << 8) | int(data[pos])) & _RC_MASK
            pos += 1
            rng <<= 8
        out[t] = s
    return out, pos, True
