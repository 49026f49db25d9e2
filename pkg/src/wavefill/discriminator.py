"""Global + local patch discriminators over high-frequency broadbands."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from wavefill.errors import EmptyBBox, ShapeMismatch
from wavefill.nn.module import Conv2d, Module, Parameter
from wavefill.nn.tensor import Tensor, leaky_relu, matmul, softmax


@dataclass
class DiscriminatorConfig:
    in_channels: int = 9
    base_channels: int = 32
    n_layers: int = 4
    local_fraction: float = 0.5
    bbox_expand: float = 0.25
    seed: int = 1


@dataclass
class DiscOutput:
    global_scores: Tensor
    local_scores: Tensor
    activations: list

    @property
    def patch_scores(self) -> list:
        return [self.global_scores, self.local_scores]


class SelfAttention(Module):
    """``x + gamma * attention(x)`` with ``gamma`` starting at zero."""

    def __init__(self, rng, channels: int, dtype=np.float32):
        hidden = max(channels // 8, 1)
        self.query = Conv2d(rng, channels, hidden, kernel=1, dtype=dtype)
        self.key = Conv2d(rng, channels, hidden, kernel=1, dtype=dtype)
        self.value = Conv2d(rng, channels, channels, kernel=1, dtype=dtype)
        self.gamma = Parameter(np.zeros((1,), dtype=dtype))

    def attention(self, x: Tensor) -> Tensor:
        """Row-stochastic ``(N, P, P)`` weights (query rows, key columns)."""
        n, _, h, w = x.shape
        q = self.query(x).reshape(n, -1, h * w)
        k = self.key(x).reshape(n, -1, h * w)
        return softmax(matmul(q.transpose(0, 2, 1), k), axis=-1)

    def forward(self, x: Tensor) -> Tensor:
        n, c, h, w = x.shape
        v = self.value(x).reshape(n, c, h * w)
        out = matmul(self.attention(x), v.transpose(0, 2, 1)).transpose(0, 2, 1).reshape(n, c, h, w)
        return x + self.gamma.reshape(1, 1, 1, 1) * out


def self_attention_layer(x: Tensor, params: SelfAttention) -> Tensor:
    return params(x)


class PatchSubnet(Module):
    """Stride-2 3x3 conv stack (channels doubling) -> self-attention -> 1-channel logits."""

    def __init__(self, rng, config: DiscriminatorConfig, dtype=np.float32):
        convs, cin = [], config.in_channels
        for i in range(config.n_layers):
            cout = config.base_channels * 2**i
            convs.append(Conv2d(rng, cin, cout, kernel=3, stride=2, padding=1, dtype=dtype))
            cin = cout
        self.convs = convs
        self.attention = SelfAttention(rng, cin, dtype)
        self.final = Conv2d(rng, cin, 1, kernel=3, dtype=dtype)

    def forward(self, x: Tensor):
        activations = []
        for conv in self.convs:
            x = leaky_relu(conv(x), 0.2)
            activations.append(x)
        return self.final(self.attention(x)), activations


def hole_bbox(known: np.ndarray) -> tuple:
    """``(y0, x0, y1, x1)`` (half-open) of the zeros in a 2D known indicator."""
    ys, xs = np.nonzero(np.asarray(known) < 0.5)
    if ys.size == 0:
        raise EmptyBBox("mask has no missing region")
    return int(ys.min()), int(xs.min()), int(ys.max()) + 1, int(xs.max()) + 1


def expand_bbox(box, height: int, width: int, fraction: float) -> tuple:
    y0, x0, y1, x1 = box
    if y1 <= y0 or x1 <= x0:
        raise EmptyBBox(f"degenerate box {box}")
    py = math.ceil((y1 - y0) * fraction / 2)
    px = math.ceil((x1 - x0) * fraction / 2)
    return max(0, y0 - py), max(0, x0 - px), min(height, y1 + py), min(width, x1 + px)


def crop_resize_matrix(start: int, stop: int, size: int, out_size: int) -> np.ndarray:
    """Linear-interpolation matrix ``(out_size, size)`` sampling ``[start, stop)``."""
    mat = np.zeros((out_size, size))
    length = stop - start
    for o in range(out_size):
        src = start + (o + 0.5) * length / out_size - 0.5
        src = min(max(src, start), stop - 1)
        i0 = int(np.floor(src))
        frac = src - i0
        i1 = min(i0 + 1, stop - 1)
        mat[o, i0] += 1.0 - frac
        mat[o, i1] += frac
    return mat


class Discriminator(Module):
    def __init__(self, config: DiscriminatorConfig, dtype=np.float32):
        self.config = config
        rng = np.random.default_rng(config.seed)
        self.global_net = PatchSubnet(rng, config, dtype)
        self.local_net = PatchSubnet(rng, config, dtype)

    def local_crop(self, band: Tensor, boxes) -> Tensor:
        n, _, h, w = band.shape
        if len(boxes) != n:
            raise ShapeMismatch(f"{len(boxes)} boxes for a batch of {n}")
        oh = max(1, int(round(h * self.config.local_fraction)))
        ow = max(1, int(round(w * self.config.local_fraction)))
        rows, cols = [], []
        for box in boxes:
            y0, x0, y1, x1 = expand_bbox(box, h, w, self.config.bbox_expand)
            rows.append(crop_resize_matrix(y0, y1, h, oh))
            cols.append(crop_resize_matrix(x0, x1, w, ow).T)
        rows = Tensor(np.stack(rows)[:, None].astype(band.dtype))
        cols = Tensor(np.stack(cols)[:, None].astype(band.dtype))
        return matmul(matmul(rows, band), cols)

    def forward(self, band: Tensor, boxes) -> DiscOutput:
        if band.shape[1] != self.config.in_channels:
            raise ShapeMismatch(f"band has {band.shape[1]} channels, expected {self.config.in_channels}")
        global_scores, global_acts = self.global_net(band)
        local_scores, local_acts = self.local_net(self.local_crop(band, boxes))
        return DiscOutput(global_scores, local_scores, global_acts + local_acts)


def discriminate(band: Tensor, mask_bbox, params: Discriminator) -> DiscOutput:
    return params(band, mask_bbox)
