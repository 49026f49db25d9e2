"""Frequency region attentive normalization.

Attention is computed among low-frequency feature positions (max-pooled to at
most 32x32) and used to aggregate value-projected high-frequency features.
The aggregate, positionally normalized, is turned into per-position
``gamma``/``beta`` that modulate the normalized low-frequency features.
"""
from __future__ import annotations

import numpy as np

from wavefill.errors import ShapeMismatch
from wavefill.nn import functional as F
from wavefill.nn.module import Conv2d, Module
from wavefill.nn.tensor import Tensor, elu, matmul, softmax

MAX_ATTENTION_SIDE = 32


def attention_hidden(channels: int) -> int:
    # positional normalization of the aggregate needs >= 2 channels
    return max(channels // 8, 2)


def pool_factor(height: int, width: int, max_side: int = MAX_ATTENTION_SIDE) -> int:
    factor = max(1, height // max_side, width // max_side)
    if height % factor or width % factor:
        raise ShapeMismatch(f"{height}x{width} cannot be pooled by {factor}")
    return factor


def attention_scores(x_low: Tensor, key_proj, query_proj) -> Tensor:
    """Row-stochastic ``(N, P, P)`` matrix: row i is the softmax over keys j of q_i . k_j.

    ``x_low`` must already be pooled to the attention resolution.
    """
    n, _, h, w = x_low.shape
    keys = key_proj(x_low).reshape(n, -1, h * w)
    queries = query_proj(x_low).reshape(n, -1, h * w)
    if keys.shape != queries.shape:
        raise ShapeMismatch(f"key {keys.shape} and query {queries.shape} projections differ")
    logits = matmul(queries.transpose(0, 2, 1), keys)
    return softmax(logits, axis=-1)


def aggregate_high(scores: Tensor, x_high: Tensor, value_proj) -> Tensor:
    """``A_i = sum_j W[i, j] h(x_high_j)`` laid back out on the pooled grid."""
    n, _, h, w = x_high.shape
    values = value_proj(x_high).reshape(n, -1, h * w)
    if scores.shape != (n, h * w, h * w):
        raise ShapeMismatch(f"scores {scores.shape} do not match {h * w} positions")
    # (P, P) @ (P, c) keeps the large score matrix untransposed
    agg = matmul(scores, values.transpose(0, 2, 1))
    return agg.transpose(0, 2, 1).reshape(n, -1, h, w)


class FRAN(Module):
    def __init__(self, rng, low_channels: int, high_channels: int, hidden: int | None = None,
                 dtype=np.float32):
        attn = attention_hidden(low_channels)
        hidden = hidden or low_channels
        self.key = Conv2d(rng, low_channels, attn, kernel=1, dtype=dtype)
        self.query = Conv2d(rng, low_channels, attn, kernel=1, dtype=dtype)
        # bias-free so an all-zero band aggregates to exactly zero
        self.value = Conv2d(rng, high_channels, attn, kernel=1, bias=False, dtype=dtype)
        self.shared = Conv2d(rng, attn, hidden, kernel=3, dtype=dtype)
        self.gamma = Conv2d(rng, hidden, low_channels, kernel=3, dtype=dtype)
        self.beta = Conv2d(rng, hidden, low_channels, kernel=3, dtype=dtype)
        self.gamma.bias.data[:] = 1.0

    def modulation(self, x_low: Tensor, x_high: Tensor):
        """Return ``(gamma, beta)`` at the resolution of ``x_low``."""
        if x_low.shape[0] != x_high.shape[0] or x_low.shape[2:] != x_high.shape[2:]:
            raise ShapeMismatch(f"low {x_low.shape} and high {x_high.shape} are not aligned")
        h, w = x_low.shape[2:]
        factor = pool_factor(h, w)
        pooled_low = F.max_pool2d(x_low, factor) if factor > 1 else x_low
        pooled_high = F.max_pool2d(x_high, factor) if factor > 1 else x_high
        scores = attention_scores(pooled_low, self.key, self.query)
        agg, _, _ = F.pono(aggregate_high(scores, pooled_high, self.value))
        agg = F.upsample_nearest(agg, factor)
        shared = elu(self.shared(agg))
        return self.gamma(shared), self.beta(shared)

    def forward(self, x_low: Tensor, x_high: Tensor) -> Tensor:
        normalized, _, _ = F.pono(x_low)
        gamma, beta = self.modulation(x_low, x_high)
        return gamma * normalized + beta


def fran_forward(x_low: Tensor, x_high: Tensor, params: FRAN) -> Tensor:
    return params(x_low, x_high)


class FRANResBlk(Module):
    """Two FRAN -> ELU -> conv stages plus a skip path (1x1 conv when widths differ)."""

    def __init__(self, rng, cin: int, cout: int, high_channels: int, dtype=np.float32):
        self.norm1 = FRAN(rng, cin, high_channels, dtype=dtype)
        self.conv1 = Conv2d(rng, cin, cout, kernel=3, dtype=dtype)
        self.norm2 = FRAN(rng, cout, high_channels, dtype=dtype)
        self.conv2 = Conv2d(rng, cout, cout, kernel=3, dtype=dtype)
        self.skip = Conv2d(rng, cin, cout, kernel=1, dtype=dtype) if cin != cout else None

    def forward(self, x_low: Tensor, x_high: Tensor) -> Tensor:
        h = self.conv1(elu(self.norm1(x_low, x_high)))
        h = self.conv2(elu(self.norm2(h, x_high)))
        skip = x_low if self.skip is None else self.skip(x_low)
        return skip + h


def fran_resblk(x_low: Tensor, x_high: Tensor, params: FRANResBlk) -> Tensor:
    return params(x_low, x_high)
