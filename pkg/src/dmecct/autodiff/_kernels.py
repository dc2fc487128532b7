"""Numba kernels for sparse masked multi-head attention.

Arrays are batch-minor: activations are ``(L, d, B)`` and attention weights
``(nnz, heads, B)`` where ``nnz`` counts the allowed (query, key) pairs of the
mask in CSR order. Head ``h`` owns features ``h*dh .. (h+1)*dh - 1``. The
innermost loops run over the batch so they vectorize.
"""

import numba as nb
import numpy as np


@nb.njit(cache=True, fastmath=True, nogil=True)
def attention_scores(q, k, indptr, indices, heads, scale, w):
    """Scaled scores per allowed pair, shifted by the row maximum."""
    L, d, B = q.shape
    dh = d // heads
    for p in range(L):
        lo = indptr[p]
        hi = indptr[p + 1]
        for e in range(lo, hi):
            j = indices[e]
            for h in range(heads):
                we = w[e, h]
                we[:] = 0
                for i in range(dh):
                    qc = q[p, h * dh + i]
                    kc = k[j, h * dh + i]
                    for b in range(B):
                        we[b] += qc[b] * kc[b]
                for b in range(B):
                    we[b] *= scale
        for h in range(heads):
            mx = w[lo, h].copy()
            for e in range(lo + 1, hi):
                we = w[e, h]
                for b in range(B):
                    mx[b] = max(mx[b], we[b])
            for e in range(lo, hi):
                we = w[e, h]
                for b in range(B):
                    we[b] -= mx[b]


@nb.njit(cache=True, fastmath=True, nogil=True)
def attention_combine(v, indptr, indices, heads, w, out):
    """Normalize exponentiated scores in place and mix the value rows."""
    L, d, B = v.shape
    dh = d // heads
    tot = np.empty(B, v.dtype)
    for p in range(L):
        lo = indptr[p]
        hi = indptr[p + 1]
        for h in range(heads):
            tot[:] = 0
            for e in range(lo, hi):
                we = w[e, h]
                for b in range(B):
                    tot[b] += we[b]
            for b in range(B):
                tot[b] = 1 / tot[b]
            for i in range(dh):
                out[p, h * dh + i] = 0
            for e in range(lo, hi):
                j = indices[e]
                we = w[e, h]
                for b in range(B):
                    we[b] *= tot[b]
                for i in range(dh):
                    oc = out[p, h * dh + i]
                    vc = v[j, h * dh + i]
                    for b in range(B):
                        oc[b] += we[b] * vc[b]


@nb.njit(cache=True, fastmath=True, nogil=True)
def attention_backward(g, q, k, v, indptr, indices, heads, scale, w, dq, dk, dv):
    """Accumulate input gradients given the output gradient ``g``."""
    L, d, B = q.shape
    dh = d // heads
    maxrow = 0
    for p in range(L):
        maxrow = max(maxrow, indptr[p + 1] - indptr[p])
    dw = np.empty((maxrow, B), dtype=q.dtype)
    acc = np.empty(B, q.dtype)
    ds = np.empty(B, q.dtype)
    for p in range(L):
        lo = indptr[p]
        hi = indptr[p + 1]
        for h in range(heads):
            acc[:] = 0
            for e in range(lo, hi):
                j = indices[e]
                de = dw[e - lo]
                de[:] = 0
                for i in range(dh):
                    gc = g[p, h * dh + i]
                    vc = v[j, h * dh + i]
                    for b in range(B):
                        de[b] += gc[b] * vc[b]
                we = w[e, h]
                for b in range(B):
                    acc[b] += we[b] * de[b]
            for e in range(lo, hi):
                j = indices[e]
                we = w[e, h]
                de = dw[e - lo]
                for b in range(B):
                    ds[b] = we[b] * (de[b] - acc[b]) * scale
                for i in range(dh):
                    c = h * dh + i
                    gc = g[p, c]
                    qc = q[p, c]
                    kc = k[j, c]
                    dvc = dv[j, c]
                    dqc = dq[p, c]
                    dkc = dk[j, c]
                    for b in range(B):
                        dvc[b] += we[b] * gc[b]
                        dqc[b] += ds[b] * kc[b]
                        dkc[b] += ds[b] * qc[b]


# Elementwise and row-wise kernels. tanh itself is left to numpy, whose
# vectorized implementation is far faster than a scalar libm call per element.

GELU_C = 0.7978845608028654  # sqrt(2 / pi)
GELU_A = 0.044715


@nb.njit(cache=True, fastmath=True, nogil=True)
def gelu_inner(x, u):
    xf = x.reshape(-1)
    uf = u.reshape(-1)
    c = x.dtype.type(GELU_C)
    a = x.dtype.type(GELU_A)
    for i in range(xf.size):
        v = xf[i]
        uf[i] = c * v * (1 + a * v * v)


@nb.njit(cache=True, fastmath=True, nogil=True)
def gelu_outer(x, t, out):
    xf = x.reshape(-1)
    tf = t.reshape(-1)
    of = out.reshape(-1)
    for i in range(xf.size):
        of[i] = 0.5 * xf[i] * (1 + tf[i])


@nb.njit(cache=True, fastmath=True, nogil=True)
def gelu_backward(g, x, t, out):
    gf = g.reshape(-1)
    xf = x.reshape(-1)
    tf = t.reshape(-1)
    of = out.reshape(-1)
    c = x.dtype.type(GELU_C)
    a3 = x.dtype.type(3 * GELU_A)
    for i in range(xf.size):
        v = xf[i]
        tt = tf[i]
        of[i] = gf[i] * (0.5 * (1 + tt) + 0.5 * v * (1 - tt * tt) * c * (1 + a3 * v * v))


@nb.njit(cache=True, fastmath=True, nogil=True)
def layer_norm_forward(x, gain, bias, eps, xhat, inv, out):
    """Rows of the 2-d view ``x``; saves ``xhat`` and ``1/std`` per row."""
    rows, d = x.shape
    for r in range(rows):
        mu = x.dtype.type(0)
        for c in range(d):
            mu += x[r, c]
        mu /= d
        var = x.dtype.type(0)
        for c in range(d):
            z = x[r, c] - mu
            xhat[r, c] = z
            var += z * z
        s = 1 / np.sqrt(var / d + eps)
        inv[r] = s
        for c in range(d):
            z = xhat[r, c] * s
            xhat[r, c] = z
            out[r, c] = z * gain[c] + bias[c]


# fastmath without "contract": an FMA in g*gain - m1 leaves the product's
# rounding residue where the exact gradient is zero (single-feature rows)
@nb.njit(cache=True, fastmath={"nnan", "ninf", "nsz", "arcp", "afn", "reassoc"}, nogil=True)
def layer_norm_backward(g, xhat, inv, gain, dx, dgain, dbias):
    rows, d = g.shape
    for r in range(rows):
        m1 = g.dtype.type(0)
        m2 = g.dtype.type(0)
        for c in range(d):
            gx = g[r, c] * gain[c]
            m1 += gx
            m2 += gx * xhat[r, c]
            dgain[c] += g[r, c] * xhat[r, c]
            dbias[c] += g[r, c]
        m1 /= d
        m2 /= d
        for c in range(d):
            dx[r, c] = inv[r] * (g[r, c] * gain[c] - m1 - xhat[r, c] * m2)
