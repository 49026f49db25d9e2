"""Spatial operators on ``(N, C, H, W)`` tensors."""
from __future__ import annotations

import numpy as np

from wavefill.errors import IndivisibleDimension, ShapeMismatch
from wavefill.nn.tensor import (
    Tensor,
    concat,
    elu,
    make_node,
    mean,
    sigmoid,
    sqrt,
)
from wavefill.wavelet import haar_analysis, haar_synthesis

PONO_EPS = 1e-5


def conv_output_size(size: int, kernel: int, stride: int = 1, dilation: int = 1, padding: int = 0) -> int:
    return (size + 2 * padding - dilation * (kernel - 1) - 1) // stride + 1


def conv2d(x: Tensor, weight: Tensor, bias: Tensor | None = None, stride: int = 1,
           dilation: int = 1, padding: int = 0) -> Tensor:
    """Cross-correlation via an explicit column matrix and a single GEMM."""
    n, cin, h, w = x.shape
    cout, wcin, kh, kw = weight.shape
    if wcin != cin:
        raise ShapeMismatch(f"input has {cin} channels, weight expects {wcin}")
    ho = conv_output_size(h, kh, stride, dilation, padding)
    wo = conv_output_size(w, kw, stride, dilation, padding)
    if ho < 1 or wo < 1:
        raise ShapeMismatch(f"{h}x{w} input too small for kernel {kh}x{kw}, dilation {dilation}")

    xp = np.pad(x.data, ((0, 0), (0, 0), (padding, padding), (padding, padding))) if padding else x.data
    cols = np.empty((cin, kh, kw, n, ho, wo), dtype=x.dtype)
    windows = []
    for i in range(kh):
        for j in range(kw):
            rs = slice(i * dilation, i * dilation + stride * (ho - 1) + 1, stride)
            cs = slice(j * dilation, j * dilation + stride * (wo - 1) + 1, stride)
            windows.append((i, j, rs, cs))
            cols[:, i, j] = xp[:, :, rs, cs].transpose(1, 0, 2, 3)
    cols2 = cols.reshape(cin * kh * kw, n * ho * wo)
    w2 = weight.data.reshape(cout, -1)
    out = (w2 @ cols2).reshape(cout, n, ho, wo).transpose(1, 0, 2, 3)
    if bias is not None:
        out = out + bias.data.reshape(1, cout, 1, 1)
    out = np.ascontiguousarray(out)

    def backward(g):
        g2 = g.transpose(1, 0, 2, 3).reshape(cout, -1)
        gw = (g2 @ cols2.T).reshape(weight.shape) if weight.requires_grad else None
        gx = None
        if x.requires_grad:
            gcols = (w2.T @ g2).reshape(cin, kh, kw, n, ho, wo)
            gxp = np.zeros_like(xp)
            for i, j, rs, cs in windows:
                gxp[:, :, rs, cs] += gcols[:, i, j].transpose(1, 0, 2, 3)
            gx = gxp[:, :, padding:padding + h, padding:padding + w] if padding else gxp
        grads = [gx, gw]
        if bias is not None:
            grads.append(g.sum(axis=(0, 2, 3)) if bias.requires_grad else None)
        return tuple(grads)

    parents = (x, weight) if bias is None else (x, weight, bias)
    return make_node(out, parents, backward)


def gated_conv2d(x: Tensor, feature_weight: Tensor, gate_weight: Tensor,
                 feature_bias: Tensor | None = None, gate_bias: Tensor | None = None,
                 stride: int = 1, dilation: int = 1, padding: int = 0, activation=elu) -> Tensor:
    """``activation(conv_f(x)) * sigmoid(conv_g(x))``; both paths share one GEMM."""
    if feature_weight.shape != gate_weight.shape:
        raise ShapeMismatch(
            f"feature/gate kernels differ: {feature_weight.shape} vs {gate_weight.shape}"
        )
    cout = feature_weight.shape[0]
    weight = concat([feature_weight, gate_weight], axis=0)
    bias = None
    if feature_bias is not None and gate_bias is not None:
        bias = concat([feature_bias, gate_bias], axis=0)
    both = conv2d(x, weight, bias, stride=stride, dilation=dilation, padding=padding)
    return activation(both[:, :cout]) * sigmoid(both[:, cout:])


def max_pool2d(x: Tensor, window: int, stride: int | None = None) -> Tensor:
    """Non-overlapping max pooling; ties go to the first element in row-major order."""
    stride = window if stride is None else stride
    if stride != window:
        raise ValueError("only non-overlapping pooling (stride == window) is supported")
    n, c, h, w = x.shape
    if h % window or w % window:
        raise IndivisibleDimension(f"{h}x{w} is not divisible by pooling window {window}")
    ho, wo = h // window, w // window
    blocks = (
        x.data.reshape(n, c, ho, window, wo, window)
        .transpose(0, 1, 2, 4, 3, 5)
        .reshape(n, c, ho, wo, window * window)
    )
    arg = blocks.argmax(axis=-1)[..., None]
    out = np.take_along_axis(blocks, arg, axis=-1)[..., 0]

    def backward(g):
        gb = np.zeros_like(blocks)
        np.put_along_axis(gb, arg, g[..., None], axis=-1)
        gx = gb.reshape(n, c, ho, wo, window, window).transpose(0, 1, 2, 4, 3, 5)
        return (gx.reshape(n, c, h, w),)

    return make_node(out, (x,), backward)


def upsample_nearest(x: Tensor, factor: int) -> Tensor:
    if factor == 1:
        return x
    n, c, h, w = x.shape
    out = np.repeat(np.repeat(x.data, factor, axis=2), factor, axis=3)

    def backward(g):
        return (g.reshape(n, c, h, factor, w, factor).sum(axis=(3, 5)),)

    return make_node(out, (x,), backward)


def pono(x: Tensor, eps: float = PONO_EPS):
    """Positional normalization across the channel axis.

    Returns ``(normalized, mean, std)`` where mean and std keep a singleton
    channel axis; ``std = sqrt(var + eps)``.
    """
    if x.shape[1] < 2:
        raise ShapeMismatch("positional normalization needs at least 2 channels")
    mu = mean(x, axis=1, keepdims=True)
    centered = x - mu
    var = mean(centered * centered, axis=1, keepdims=True)
    std = sqrt(var + eps)
    return centered / std, mu, std


def dwt(x: Tensor) -> Tensor:
    """One Haar analysis step; output channels are ``[LL, LH, HL, HH]`` blocks of C."""
    bands = haar_analysis(x.data)
    out = np.concatenate(bands, axis=1)

    def backward(g):
        return (haar_synthesis(*np.split(g, 4, axis=1)),)

    return make_node(out, (x,), backward)


def idwt(x: Tensor) -> Tensor:
    """Inverse of :func:`dwt`; its backward is the forward transform."""
    if x.shape[1] % 4:
        raise ShapeMismatch(f"channel count {x.shape[1]} is not a multiple of 4")
    out = haar_synthesis(*np.split(x.data, 4, axis=1))

    def backward(g):
        return (np.concatenate(haar_analysis(g), axis=1),)

    return make_node(out, (x,), backward)
