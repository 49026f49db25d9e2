"""Training objectives.

Distances are element means (resolution independent).  Score arguments may be a
single patch grid, a list of grids, or a :class:`DiscOutput`; multiple grids of
one discriminator are averaged with equal weight.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from wavefill.discriminator import DiscOutput
from wavefill.errors import ExtractorDepthMismatch, LayerCountMismatch, NonFiniteLoss, ShapeMismatch
from wavefill.nn import functional as F
from wavefill.nn.module import Conv2d, Module
from wavefill.nn.tensor import Tensor, absolute, mean, no_grad, relu, sqrt


@dataclass
class LossWeights:
    lf: float = 2.0
    fm: float = 5.0
    perceptual: float = 10.0


@dataclass
class LossReport:
    lf_l1: float
    g_adv: float
    d_adv_per_level: list
    fm: float
    perceptual: float
    total_g: float
    total_d: float

    def record(self, **extra) -> dict:
        return {**extra, **asdict(self)}


def _check_shapes(a: Tensor, b: Tensor) -> None:
    if a.shape != b.shape:
        raise ShapeMismatch(f"{a.shape} vs {b.shape}")


def _grids(scores) -> list:
    if isinstance(scores, DiscOutput):
        return scores.patch_scores
    if isinstance(scores, Tensor):
        return [scores]
    return list(scores)


def loss_lf(pred_low: Tensor, gt_low: Tensor) -> Tensor:
    _check_shapes(pred_low, gt_low)
    return mean(absolute(pred_low - gt_low))


def loss_d_hinge(real_scores, fake_scores) -> Tensor:
    real, fake = _grids(real_scores), _grids(fake_scores)
    if len(real) != len(fake):
        raise ShapeMismatch(f"{len(real)} real grids vs {len(fake)} fake grids")
    total = 0.0
    for r, f in zip(real, fake):
        _check_shapes(r, f)
        total = total + mean(relu(1.0 - r)) + mean(relu(1.0 + f))
    return total * (1.0 / len(real))


def loss_g_adv(fake_scores_per_level) -> Tensor:
    total = 0.0
    for level in fake_scores_per_level:
        grids = _grids(level)
        level_mean = sum((mean(g) for g in grids), 0.0) * (1.0 / len(grids))
        total = total - level_mean
    return total


def loss_fm(real_acts, fake_acts) -> Tensor:
    """Sum over levels and layers of mean |D_i(fake) - D_i(real)|; real side is constant."""
    if len(real_acts) != len(fake_acts):
        raise LayerCountMismatch(f"{len(real_acts)} vs {len(fake_acts)} levels")
    total = 0.0
    for real_level, fake_level in zip(real_acts, fake_acts):
        if len(real_level) != len(fake_level):
            raise LayerCountMismatch(f"{len(real_level)} vs {len(fake_level)} layers")
        for r, f in zip(real_level, fake_level):
            _check_shapes(r, f)
            total = total + mean(absolute(f - r.detach()))
    return total


class FeatureExtractor(Module):
    """Frozen random conv stack with five relu taps (VGG-19 relu*_2 stand-ins)."""

    def __init__(self, in_channels: int = 3, widths=(8, 16, 32, 32, 32), seed: int = 1234,
                 dtype=np.float32):
        rng = np.random.default_rng(seed)
        stages, cin = [], in_channels
        for width in widths:
            stages.append([
                Conv2d(rng, cin, width, kernel=3, dtype=dtype),
                Conv2d(rng, width, width, kernel=3, dtype=dtype),
            ])
            cin = width
        self.stages = stages
        self.freeze()

    def named_parameters(self, prefix: str = ""):
        for s, (a, b) in enumerate(self.stages):
            yield from a.named_parameters(f"{prefix}.stages.{s}.0".lstrip("."))
            yield from b.named_parameters(f"{prefix}.stages.{s}.1".lstrip("."))

    def forward(self, x: Tensor) -> list:
        taps = []
        for s, (a, b) in enumerate(self.stages):
            if s:
                x = F.max_pool2d(x, 2)
            x = relu(b(relu(a(x))))
            taps.append(x)
        return taps


def loss_perceptual(pred_image: Tensor, gt_image: Tensor, extractor, layer_weights=None,
                    l2_weight: float = 1.0, l2_tap: int | None = None) -> Tensor:
    """Weighted L1 over every tap plus an unsquared (RMS) L2 term on one deep tap.

    The L2 tap defaults to the deepest-but-one.
    """
    _check_shapes(pred_image, gt_image)
    pred_taps = extractor(pred_image)
    with no_grad():
        gt_taps = extractor(gt_image.detach())
    if layer_weights is None:
        layer_weights = [1.0] * len(pred_taps)
    if len(layer_weights) != len(pred_taps) or len(gt_taps) != len(pred_taps):
        raise ExtractorDepthMismatch(
            f"{len(layer_weights)} weights for {len(pred_taps)} extractor taps"
        )
    if l2_tap is None:
        l2_tap = max(len(pred_taps) - 2, 0)
    total = 0.0
    for weight, p, g in zip(layer_weights, pred_taps, gt_taps):
        total = total + weight * mean(absolute(p - g))
    diff = pred_taps[l2_tap] - gt_taps[l2_tap]
    return total + l2_weight * sqrt(mean(diff * diff))


def _value(x) -> float:
    return float(x.data) if isinstance(x, Tensor) else float(x)


def total_objective(lf, g_adv, fm, perceptual, d_adv_per_level=(), weights: LossWeights | None = None):
    """``(total_g, total_d)``; works on tensors (keeps the graph) or plain floats."""
    weights = weights or LossWeights()
    parts = [lf, g_adv, fm, perceptual, *d_adv_per_level]
    if not all(np.isfinite(_value(p)) for p in parts):
        raise NonFiniteLoss(f"non-finite loss component: {[_value(p) for p in parts]}")
    total_g = weights.lf * lf + g_adv + weights.fm * fm + weights.perceptual * perceptual
    total_d = sum(d_adv_per_level, 0.0)
    return total_g, total_d
