"""Numba kernels, bit-identical to ``numpy_impl``.

Each function mirrors the numpy twin's floating-point evaluation order
exactly: same term order in every accumulation, same libm scalar calls
(math.erf / math.exp / math.log1p), no fastmath, no parallel loops.
Do not change the order of operations in one module without the other.
"""

import math

import numpy as np
from numba import njit

_INV_SQRT2 = 1.0 / math.sqrt(2.0)


@njit(cache=True)
def exp_core(x):
    out = np.empty_like(x)
    for i in range(x.shape[0]):
        out[i] = math.exp(x[i])
    return out


@njit(cache=True)
def gelu_core(x):
    out = np.empty_like(x)
    for i in range(x.shape[0]):
        e = math.erf(x[i] * _INV_SQRT2)
        out[i] = (0.5 * x[i]) * (1.0 + e)
    return out


@njit(cache=True)
def softplus_core(x):
    out = np.empty_like(x)
    for i in range(x.shape[0]):
        neg = math.log1p(math.exp(-abs(x[i])))
        if x[i] > 0.0:
            out[i] = x[i] + neg
        else:
            out[i] = neg
    return out


@njit(cache=True)
def conv2d_core(xp, w, b, stride):
    k = w.shape[0]
    cin = w.shape[2]
    cout = w.shape[3]
    ho = (xp.shape[0] - k) // stride + 1
    wo = (xp.shape[1] - k) // stride + 1
    out = np.zeros((ho, wo, cout))
    for oy in range(ho):
        for ox in range(wo):
            acc = out[oy, ox]
            for ky in range(k):
                for kx in range(k):
                    iy = oy * stride + ky
                    ix = ox * stride + kx
                    for ci in range(cin):
                        xv = xp[iy, ix, ci]
                        for co in range(cout):
                            acc[co] += xv * w[ky, kx, ci, co]
            for co in range(cout):
                acc[co] += b[co]
    return out


@njit(cache=True)
def tconv2d_core(y, w, b, stride):
    k = w.shape[0]
    cin = w.shape[2]
    cout = w.shape[3]
    h = y.shape[0]
    w_ = y.shape[1]
    hs = h * stride
    ws = w_ * stride
    p = (k - 1) // 2
    g = np.zeros((hs + 2 * p, ws + 2 * p, cout))
    for ky in range(k):
        for kx in range(k):
            for ci in range(cin):
                for oy in range(h):
                    for ox in range(w_):
                        yv = y[oy, ox, ci]
                        gy = oy * stride + ky
                        gx = ox * stride + kx
                        for co in range(cout):
                            g[gy, gx, co] += yv * w[ky, kx, ci, co]
    rows = g[p : p + hs].copy()
    for t in range(p):
        for x in range(rows.shape[1]):
            for co in range(cout):
                rows[0, x, co] += g[t, x, co]
    for t in range(p):
        for x in range(rows.shape[1]):
            for co in range(cout):
                rows[hs - 1, x, co] += g[hs + p + t, x, co]
    out = rows[:, p : p + ws].copy()
    for t in range(p):
        for yy in range(hs):
            for co in range(cout):
                out[yy, 0, co] += rows[yy, t, co]
    for t in range(p):
        for yy in range(hs):
            for co in range(cout):
                out[yy, ws - 1, co] += rows[yy, ws + p + t, co]
    for yy in range(hs):
        for xx in range(ws):
            for co in range(cout):
                out[yy, xx, co] += b[co]
    return out


@njit(cache=True)
def linear_core(x2, w, b):
    n = x2.shape[0]
    cin = w.shape[0]
    cout = w.shape[1]
    out = np.zeros((n, cout))
    for t in range(n):
        acc = out[t]
        for ci in range(cin):
            xv = x2[t, ci]
            for co in range(cout):
                acc[co] += xv * w[ci, co]
        for co in range(cout):
            acc[co] += b[co]
    return out


@njit(cache=True)
def layer_norm_core(x, gamma, beta, eps):
    h, w_, c = x.shape
    out = np.empty_like(x)
    for i in range(h):
        for j in range(w_):
            mean = x[i, j, 0]
            for ci in range(1, c):
                mean += x[i, j, ci]
            mean /= float(c)
            d0 = x[i, j, 0] - mean
            var = d0 * d0
            for ci in range(1, c):
                d = x[i, j, ci] - mean
                var += d * d
            var /= float(c)
            inv = 1.0 / math.sqrt(var + eps)
            for ci in range(c):
                out[i, j, ci] = ((x[i, j, ci] - mean) * inv) * gamma[ci] + beta[ci]
    return out


@njit(cache=True)
def na_core(q, k, v, bias, window):
    h, w_, nh, d = q.shape
    wh = min(window, h)
    ww = min(window, w_)
    off = (window - 1) // 2
    scale = 1.0 / math.sqrt(d)
    nwin = wh * ww
    out = np.empty((h, w_, nh, d))
    scores = np.empty(nwin)
    ex = np.empty(nwin)
    num = np.empty(d)
    for i in range(h):
        i0 = i - off
        if i0 < 0:
            i0 = 0
        if i0 > h - wh:
            i0 = h - wh
        for j in range(w_):
            j0 = j - off
            if j0 < 0:
                j0 = 0
            if j0 > w_ - ww:
                j0 = w_ - ww
            for hd in range(nh):
                for n in range(nwin):
                    r = i0 + n // ww
                    s = j0 + n % ww
                    dot = 0.0
                    for dd in range(d):
                        dot += q[i, j, hd, dd] * k[r, s, hd, dd]
                    sc = dot * scale
                    scores[n] = sc + bias[hd, r - i + window - 1, s - j + window - 1]
                m = scores[0]
                for n in range(1, nwin):
                    if scores[n] > m:
                        m = scores[n]
                for n in range(nwin):
                    ex[n] = math.exp(scores[n] - m)
                den = ex[0]
                for n in range(1, nwin):
                    den += ex[n]
                for dd in range(d):
                    num[dd] = 0.0
                for n in range(nwin):
                    r = i0 + n // ww
                    s = j0 + n % ww
                    en = ex[n]
                    for dd in range(d):
                        num[dd] += en * v[r, s, hd, dd]
                for dd in range(d):
                    out[i, j, hd, dd] = num[dd] / den
    return out


@njit(cache=True)
def _quantize_pmf_into(pmf, freq, rem):
    m = pmf.shape[0]
    total = 0
    for i in range(m):
        scaled = pmf[i] * 65536.0
        f = int(math.floor(scaled))
        freq[i] = f
        rem[i] = scaled - f
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


@njit(cache=True)
def gaussian_cdf_rows(sigmas):
    n = sigmas.shape[0]
    out = np.empty((n, 130), dtype=np.int64)
    pmf = np.empty(129)
    freq = np.empty(129, dtype=np.int64)
    rem = np.empty(129)
    for row in range(n):
        s = sigmas[row]
        prev = 0.0
        for t in range(1, 129):
            c = 0.5 * math.erf(((t - 64.5) / s) * _INV_SQRT2) + 0.5
            pmf[t - 1] = c - prev
            prev = c
        pmf[128] = 1.0 - prev
        _quantize_pmf_into(pmf, freq, rem)
        out[row, 0] = 0
        acc = 0
        for i in range(129):
            acc += freq[i]
            out[row, i + 1] = acc
    return out


@njit(cache=True)
def rc_encode_core(symbols, rows):
    n = symbols.shape[0]
    buf = np.empty(2 * n + 16, dtype=np.uint8)
    pos = 0
    low = 0
    rng = 0xFFFFFFFF
    cache = 0
    started = False
    pend = 0
    for t in range(n):
        s = symbols[t]
        cl = rows[t, s]
        ch = rows[t, s + 1]
        r = rng >> 16
        low += cl * r
        rng = (ch - cl) * r
        while rng < (1 << 24):
            # shift_low, deferred-carry variant
            if low < 0xFF000000 or low > 0xFFFFFFFF:
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
            low = (low << 8) & 0xFFFFFFFF
            rng <<= 8
    for _ in range(5):
        # forced shift_low: flush commits the current low exactly
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
        low = (low << 8) & 0xFFFFFFFF
    return buf, pos


@njit(cache=True)
def rc_decode_core(data, rows, n):
    out = np.empty(n, dtype=np.int64)
    size = data.shape[0]
    if size < 4:
        return out, 0, False
    code = (
        (np.int64(data[0]) << 24)
        | (np.int64(data[1]) << 16)
        | (np.int64(data[2]) << 8)
        | np.int64(data[3])
    )
    pos = 4
    rng = np.int64(0xFFFFFFFF)
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
        cl = rows[t, s]
        ch = rows[t, s + 1]
        code -= cl * r
        rng = (ch - cl) * r
        while rng < (1 << 24):
            if pos >= size:
                return out, pos, False
            code = ((code << 8) | np.int64(data[pos])) & 0xFFFFFFFF
            pos += 1
            rng <<= 8
        out[t] = s
    return out, pos, True
