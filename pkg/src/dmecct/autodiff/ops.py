"""Differentiable primitives.

Shapes are checked strictly. The only implicit broadcast is the bias form
used by ``add`` and ``mul``: the second operand may match the trailing axes
of the first and is then repeated over the leading ones.
"""

from __future__ import annotations

import numpy as np

from ..errors import ShapeMismatch
from . import _kernels
from .tensor import Tensor, as_tensor, make_node

LN_EPS = 1e-5


def _bias_axes(a: Tensor, b: Tensor, op: str) -> tuple:
    if a.shape == b.shape:
        return ()
    if b.ndim <= a.ndim and a.shape[a.ndim - b.ndim:] == b.shape:
        return tuple(range(a.ndim - b.ndim))
    raise ShapeMismatch(f"{op}: shapes {a.shape} and {b.shape} are incompatible")


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b, a.dtype if isinstance(a, Tensor) else None)
    axes = _bias_axes(a, b, "add")

    def back(g):
        return g, (g.sum(axis=axes) if axes else g)

    return make_node(a.data + b.data, (a, b), back)


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b, a.dtype if isinstance(a, Tensor) else None)
    axes = _bias_axes(a, b, "mul")

    def back(g):
        gb = g * a.data
        return g * b.data, (gb.sum(axis=axes) if axes else gb)

    return make_node(a.data * b.data, (a, b), back)


def scale(a: Tensor, c: float) -> Tensor:
    c = a.dtype.type(c)
    return make_node(a.data * c, (a,), lambda g: (g * c,))


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """``a @ b`` for ``a`` of shape (..., m, k) and ``b`` either (k, n) or (..., k, n)."""
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ShapeMismatch(f"matmul: {a.shape} @ {b.shape}")
    if b.ndim > 2 and a.shape[:-2] != b.shape[:-2]:
        raise ShapeMismatch(f"matmul: batch dims differ, {a.shape} @ {b.shape}")
    shared = b.ndim == 2

    def back(g):
        g = np.ascontiguousarray(g)
        ga = g @ np.swapaxes(b.data, -1, -2)
        if shared:
            k, n = b.shape
            gb = a.data.reshape(-1, k).T @ g.reshape(-1, n)
        else:
            gb = np.swapaxes(a.data, -1, -2) @ g
        return ga, gb

    return make_node(a.data @ b.data, (a, b), back)


def concat(tensors, axis: int = -1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    ref = tensors[0]
    ax = axis % ref.ndim
    for t in tensors[1:]:
        if t.ndim != ref.ndim or any(t.shape[i] != ref.shape[i] for i in range(ref.ndim) if i != ax):
            raise ShapeMismatch(f"concat: {t.shape} does not fit {ref.shape} along axis {axis}")
    bounds = np.cumsum([0] + [t.shape[ax] for t in tensors])

    def back(g):
        return tuple(np.take(g, np.arange(lo, hi), axis=ax) for lo, hi in zip(bounds[:-1], bounds[1:]))

    return make_node(np.concatenate([t.data for t in tensors], axis=ax), tensors, back)


def slice_(a: Tensor, index) -> Tensor:
    """Basic indexing (ints and slices); the gradient is scattered back."""
    items = index if isinstance(index, tuple) else (index,)
    if not all(isinstance(i, (int, np.integer, slice)) or i is Ellipsis for i in items):
        raise ShapeMismatch("slice: only ints, slices and Ellipsis are supported")

    def back(g):
        full = np.zeros_like(a.data)
        full[index] = g
        return (full,)

    return make_node(np.array(a.data[index]), (a,), back)


def transpose(a: Tensor, axes=None) -> Tensor:
    axes = tuple(reversed(range(a.ndim))) if axes is None else tuple(axes)
    if sorted(axes) != list(range(a.ndim)):
        raise ShapeMismatch(f"transpose: bad axes {axes} for {a.ndim}-d tensor")
    inverse = tuple(np.argsort(axes))
    return make_node(np.transpose(a.data, axes), (a,), lambda g: (np.transpose(g, inverse),))


def total(a: Tensor) -> Tensor:
    """Sum of all entries, as a 0-d tensor."""
    return make_node(np.asarray(a.data.sum(), dtype=a.dtype), (a,), lambda g: (np.full_like(a.data, g),))


def mean(a: Tensor) -> Tensor:
    return scale(total(a), 1.0 / a.data.size)


def gelu(a: Tensor) -> Tensor:
    """Tanh-approximated GELU; the backward is the derivative of that approximation.

    ``0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3)))``
    """
    x = np.ascontiguousarray(a.data)
    t = np.empty_like(x)
    _kernels.gelu_inner(x, t)
    np.tanh(t, out=t)
    out = np.empty_like(x)
    _kernels.gelu_outer(x, t, out)

    def back(g):
        dx = np.empty_like(x)
        _kernels.gelu_backward(np.ascontiguousarray(g), x, t, dx)
        return (dx,)

    return make_node(out, (a,), back)


def layer_norm(a: Tensor, gain: Tensor, bias: Tensor, eps: float = LN_EPS) -> Tensor:
    """Normalize over the last axis, then apply a learned gain and bias."""
    d = a.shape[-1]
    if gain.shape != (d,) or bias.shape != (d,):
        raise ShapeMismatch(f"layer_norm: gain/bias must have shape ({d},)")
    dtype = a.dtype
    x = np.ascontiguousarray(a.data).reshape(-1, d)
    xhat = np.empty_like(x)
    inv = np.empty(x.shape[0], dtype=dtype)
    out = np.empty_like(x)
    _kernels.layer_norm_forward(x, gain.data.astype(dtype, copy=False), bias.data.astype(dtype, copy=False),
                                dtype.type(eps), xhat, inv, out)

    def back(g):
        g2 = np.ascontiguousarray(g).reshape(-1, d)
        dx = np.empty_like(x)
        dgain = np.zeros(d, dtype=dtype)
        dbias = np.zeros(d, dtype=dtype)
        _kernels.layer_norm_backward(g2, xhat, inv, gain.data.astype(dtype, copy=False), dx, dgain, dbias)
        return dx.reshape(a.shape), dgain, dbias

    return make_node(out.reshape(a.shape), (a, gain, bias), back)


def softmax_masked(logits: Tensor, mask) -> Tensor:
    """Softmax over the last axis of ``logits + mask``; ``mask`` is a constant additive array."""
    m = np.asarray(mask, dtype=logits.dtype)
    if m.shape != logits.shape[logits.ndim - m.ndim:]:
        raise ShapeMismatch(f"softmax_masked: mask {m.shape} vs logits {logits.shape}")
    z = logits.data + m
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    y = e / e.sum(axis=-1, keepdims=True)

    def back(g):
        return (y * (g - (g * y).sum(axis=-1, keepdims=True)),)

    return make_node(y, (logits,), back)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1 / (1 + e), e / (1 + e)).astype(x.dtype, copy=False)


def _softplus(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0) + np.log1p(np.exp(-np.abs(x)))


def sigmoid(a: Tensor) -> Tensor:
    y = _sigmoid(a.data)
    return make_node(y, (a,), lambda g: (g * y * (1 - y),))


def bce_with_logits(logits: Tensor, targets, reduction: str = "sum") -> Tensor:
    """Binary cross-entropy with ``P(t = 1) = sigmoid(logits)``, summed over all entries.

    Uses the softplus form, finite for any finite logit.
    """
    t = np.asarray(targets, dtype=logits.dtype)
    if t.shape != logits.shape:
        raise ShapeMismatch(f"bce_with_logits: targets {t.shape} vs logits {logits.shape}")
    if reduction != "sum":
        raise ValueError(f"unsupported reduction {reduction!r}")
    x = logits.data
    value = (t * _softplus(-x) + (1 - t) * _softplus(x)).sum()

    def back(g):
        return (g * (_sigmoid(x) - t),)

    return make_node(np.asarray(value, dtype=logits.dtype), (logits,), back)


def masked_attention(q: Tensor, k: Tensor, v: Tensor, csr, heads: int) -> Tensor:
    """Multi-head scaled dot-product attention restricted to the pairs in ``csr``.

    ``q``, ``k``, ``v`` have shape (B, L, d); ``csr = (indptr, indices)`` lists
    the allowed keys of every query. Equivalent to per-head
    ``softmax_masked(q k^T / sqrt(d/heads), mask) v`` but only touches allowed
    pairs, so masked weights are exactly zero.
    """
    if not (q.shape == k.shape == v.shape) or q.ndim != 3:
        raise ShapeMismatch(f"masked_attention: q {q.shape}, k {k.shape}, v {v.shape}")
    B, L, d = q.shape
    if d % heads:
        raise ShapeMismatch(f"masked_attention: width {d} not divisible by {heads} heads")
    indptr, indices = csr
    if len(indptr) != L + 1:
        raise ShapeMismatch(f"masked_attention: mask has {len(indptr) - 1} rows, sequence has {L}")
    dtype = q.dtype
    scl = dtype.type(1.0 / np.sqrt(d // heads))
    qt, kt, vt = (np.ascontiguousarray(np.transpose(x.data, (1, 2, 0))) for x in (q, k, v))
    w = np.empty((len(indices), heads, B), dtype=dtype)
    out = np.empty_like(qt)
    _kernels.attention_scores(qt, kt, indptr, indices, heads, scl, w)
    np.exp(w, out=w)
    _kernels.attention_combine(vt, indptr, indices, heads, w, out)

    def back(g):
        gt = np.ascontiguousarray(np.transpose(g, (1, 2, 0)))
        dq, dk, dv = np.zeros_like(qt), np.zeros_like(qt), np.zeros_like(qt)
        _kernels.attention_backward(gt, qt, kt, vt, indptr, indices, heads, scl, w, dq, dk, dv)
        return tuple(np.ascontiguousarray(np.transpose(x, (2, 0, 1))) for x in (dq, dk, dv))

    return make_node(np.ascontiguousarray(np.transpose(out, (2, 0, 1))), (q, k, v), back)


def dense_masked_attention(q: Tensor, k: Tensor, v: Tensor, mask, heads: int) -> Tensor:
    """The same attention composed from ``matmul`` and ``softmax_masked`` (reference path)."""
    B, L, d = q.shape
    dh = d // heads
    outs = []
    for h in range(heads):
        cols = (slice(None), slice(None), slice(h * dh, (h + 1) * dh))
        qh, kh, vh = slice_(q, cols), slice_(k, cols), slice_(v, cols)
        s = scale(matmul(qh, transpose(kh, (0, 2, 1))), 1.0 / np.sqrt(dh))
        outs.append(matmul(softmax_masked(s, mask), vh))
    return concat(outs, axis=-1)
