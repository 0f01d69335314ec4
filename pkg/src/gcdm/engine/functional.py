"""Layer-level operations built on the tensor primitives.

conv2d is the workhorse: im2col plus one batched BLAS matmul per call, with
the column buffer recomputed during backward to keep memory flat.
"""

from __future__ import annotations

import math

import numpy as np

from gcdm.engine import tensor as T
from gcdm.engine.tensor import Tensor, _accumulate, _node


def silu(x: Tensor) -> Tensor:
    """x * sigmoid(x), fused into one node (big maps are bandwidth-bound)."""
    sig = 1.0 / (1.0 + np.exp(-x.data))
    out_data = x.data * sig

    def backward(g):
        _accumulate(x, g * (sig * (1.0 + x.data * (1.0 - sig))))

    return _node(out_data, (x,), backward)


def group_norm(x: Tensor, gamma: Tensor, beta: Tensor, groups: int, eps: float) -> Tensor:
    """Group normalization as one fused node with the standard backward."""
    n, c, h, w = x.shape
    grouped = x.data.reshape(n, groups, -1)
    m = grouped.shape[2]
    mean = grouped.mean(axis=2, keepdims=True)
    xhat = grouped - mean
    var = np.einsum("ngm,ngm->ng", xhat, xhat)[..., None] / m
    inv = 1.0 / np.sqrt(var + eps)
    xhat *= inv
    xhat = xhat.reshape(n, c, h, w)
    out_data = xhat * gamma.data
    out_data += beta.data

    def backward(g):
        if gamma.requires_grad:
            _accumulate(gamma, (g * xhat).sum(axis=(0, 2, 3), keepdims=True))
        if beta.requires_grad:
            _accumulate(beta, g.sum(axis=(0, 2, 3), keepdims=True))
        if x.requires_grad:
            dxhat = (g * gamma.data).reshape(n, groups, -1)
            xhat_g = xhat.reshape(n, groups, -1)
            mean_d = dxhat.mean(axis=2, keepdims=True)
            mean_dx = (dxhat * xhat_g).mean(axis=2, keepdims=True)
            dx = inv * (dxhat - mean_d - xhat_g * mean_dx)
            _accumulate(x, dx.reshape(n, c, h, w))

    return _node(out_data, (x, gamma, beta), backward)


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    """Numerically stable softmax; rows along ``axis`` sum to 1."""
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out_data = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        inner = (g * out_data).sum(axis=axis, keepdims=True)
        _accumulate(x, out_data * (g - inner))

    return _node(out_data, (x,), backward)


def attention(q: Tensor, k: Tensor, v: Tensor) -> Tensor:
    """softmax(q kᵀ / sqrt(d)) v, for 2-D or equally-batched 3-D operands."""
    if q.shape[-1] != k.shape[-1]:
        raise ValueError(f"query/key width mismatch: {q.shape} vs {k.shape}")
    if k.shape[-2] != v.shape[-2]:
        raise ValueError(f"key/value count mismatch: {k.shape} vs {v.shape}")
    d = q.shape[-1]
    if d <= 0:
        raise ValueError("attention width must be positive")
    axes = tuple(range(k.ndim - 2)) + (k.ndim - 1, k.ndim - 2)
    scores = T.mul(T.matmul(q, T.transpose(k, axes)), Tensor(1.0 / math.sqrt(d)))
    return T.matmul(softmax(scores, axis=-1), v)


# -- convolution ---------------------------------------------------------------------


def _conv_geometry(x_shape, w_shape, stride, pad):
    n, cx, h, wd = x_shape
    o, cw, kh, kw = w_shape
    if cx != cw:
        raise ValueError(f"conv2d channel mismatch: input {x_shape} kernel {w_shape}")
    oh = (h + 2 * pad - kh) // stride + 1
    ow = (wd + 2 * pad - kw) // stride + 1
    if oh <= 0 or ow <= 0:
        raise ValueError(f"conv2d output would be empty: input {x_shape} kernel {w_shape}")
    return n, cx, o, kh, kw, oh, ow


def _fill_cols(cols: np.ndarray, xb: np.ndarray, kh: int, kw: int, stride: int, oh: int, ow: int):
    for i in range(kh):
        for j in range(kw):
            cols[:, i, j] = xb[:, i : i + stride * oh : stride, j : j + stride * ow : stride]


def _zero_pad(x: np.ndarray, pad: int) -> np.ndarray:
    n, c, h, w = x.shape
    out = np.zeros((n, c, h + 2 * pad, w + 2 * pad), dtype=x.dtype)
    out[:, :, pad:-pad, pad:-pad] = x
    return out


def conv2d_raw(x: np.ndarray, w: np.ndarray, stride: int = 1, pad: int = 0) -> np.ndarray:
    """Forward-only NCHW cross-correlation on plain arrays (no graph).

    Processed one sample at a time so the im2col buffer stays cache-resident;
    on this machine memory bandwidth, not FLOPs, bounds conv throughput.
    """
    n, c, o, kh, kw, oh, ow = _conv_geometry(x.shape, w.shape, stride, pad)
    if pad:
        x = _zero_pad(x, pad)
    wm = w.reshape(o, -1)
    out = np.empty((n, o, oh, ow), dtype=x.dtype)
    cols = np.empty((c, kh, kw, oh, ow), dtype=x.dtype)
    colsm = cols.reshape(c * kh * kw, oh * ow)
    for b in range(n):
        _fill_cols(cols, x[b], kh, kw, stride, oh, ow)
        np.matmul(wm, colsm, out=out[b].reshape(o, oh * ow))
    return out


def conv2d(x: Tensor, w: Tensor, stride: int = 1, pad: int = 0) -> Tensor:
    """Cross-correlation of NCHW input with OIHW kernel, differentiable in both."""
    out_data = conv2d_raw(x.data, w.data, stride, pad)
    n, c, o, kh, kw, oh, ow = _conv_geometry(x.shape, w.shape, stride, pad)

    def backward(g):
        xp = _zero_pad(x.data, pad) if pad else x.data
        wm = w.data.reshape(o, -1)
        cols = np.empty((c, kh, kw, oh, ow), dtype=xp.dtype)
        colsm = cols.reshape(c * kh * kw, oh * ow)
        need_w = w.requires_grad
        need_x = x.requires_grad
        gw = np.zeros((o, c * kh * kw), dtype=wm.dtype) if need_w else None
        gw_step = np.empty_like(gw) if need_w else None
        gx = np.zeros_like(xp) if need_x else None
        scratch = np.empty_like(colsm) if need_x else None
        for b in range(n):
            _fill_cols(cols, xp[b], kh, kw, stride, oh, ow)
            gb = g[b].reshape(o, oh * ow)
            if need_w:
                np.matmul(gb, colsm.T, out=gw_step)
                gw += gw_step
            if need_x:
                np.matmul(wm.T, gb, out=scratch)
                dcols = scratch.reshape(c, kh, kw, oh, ow)
                gxb = gx[b]
                for i in range(kh):
                    for j in range(kw):
                        gxb[:, i : i + stride * oh : stride, j : j + stride * ow : stride] += dcols[
                            :, i, j
                        ]
        if need_w:
            _accumulate(w, gw.reshape(w.shape))
        if need_x:
            if pad:
                gx = gx[:, :, pad:-pad, pad:-pad]
            _accumulate(x, gx)

    return _node(out_data, (x, w), backward)


# -- resolution changes -------------------------------------------------------------


def avg_pool2x(x: Tensor) -> Tensor:
    n, c, h, w = x.shape
    if h % 2 or w % 2:
        raise ValueError(f"avg_pool2x needs even spatial dims, got {x.shape}")
    out_data = x.data.reshape(n, c, h // 2, 2, w // 2, 2).mean(axis=(3, 5))

    def backward(g):
        gx = np.repeat(np.repeat(g, 2, axis=2), 2, axis=3) * 0.25
        _accumulate(x, gx)

    return _node(out_data, (x,), backward)


def upsample_nearest2x(x: Tensor) -> Tensor:
    n, c, h, w = x.shape
    out_data = np.repeat(np.repeat(x.data, 2, axis=2), 2, axis=3)

    def backward(g):
        gx = g.reshape(n, c, h, 2, w, 2).sum(axis=(3, 5))
        _accumulate(x, gx)

    return _node(out_data, (x,), backward)


def pad2d(x: Tensor, pad: int) -> Tensor:
    if pad == 0:
        return x

    def backward(g):
        _accumulate(x, g[:, :, pad:-pad, pad:-pad])

    return _node(np.pad(x.data, ((0, 0), (0, 0), (pad, pad), (pad, pad))), (x,), backward)


# -- indexing / expansion -------------------------------------------------------------


def gather_rows(x: Tensor, indices: np.ndarray) -> Tensor:
    """Select rows of a 2-D tensor; gradient scatter-adds into the source."""
    indices = np.asarray(indices, dtype=np.intp)

    def backward(g):
        gx = np.zeros_like(x.data)
        np.add.at(gx, indices, g)
        _accumulate(x, gx)

    return _node(x.data[indices], (x,), backward)


def repeat_axis(x: Tensor, k: int, axis: int) -> Tensor:
    """Repeat each slice k times in place: [a, b] -> [a, a, b, b] for k=2."""
    n = x.shape[axis]

    def backward(g):
        shape = list(g.shape)
        shape[axis : axis + 1] = [n, k]
        _accumulate(x, g.reshape(shape).sum(axis=axis + 1))

    return _node(np.repeat(x.data, k, axis=axis), (x,), backward)


def tile_axis(x: Tensor, k: int, axis: int) -> Tensor:
    """Tile the whole axis k times: [a, b] -> [a, b, a, b] for k=2."""
    n = x.shape[axis]

    def backward(g):
        shape = list(g.shape)
        shape[axis : axis + 1] = [k, n]
        _accumulate(x, g.reshape(shape).sum(axis=axis))

    return _node(np.concatenate([x.data] * k, axis=axis), (x,), backward)
