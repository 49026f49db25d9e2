"""Three-branch wavelet-domain generator.

Tensors are ``(N, C, H, W)``.  For an ``S x S`` image with ``c`` channels the
branches see LowFreq ``(c, S/4, S/4)``, Lv2-HighFreq ``(3c, S/4, S/4)`` and
Lv1-HighFreq ``(3c, S/2, S/2)``; every branch also receives its known-region
indicator (1 = known) as an extra channel.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from wavefill.errors import IndivisibleDimension, ShapeMismatch
from wavefill.fran import FRANResBlk
from wavefill.nn import functional as F
from wavefill.nn.module import GatedConv2d, Module
from wavefill.nn.tensor import Tensor, concat, identity, no_grad
from wavefill.wavelet import haar_analysis


@dataclass
class GeneratorConfig:
    base_channels: int = 32
    num_gc_blocks: int = 4
    dilation_schedule: list = field(default_factory=lambda: [2, 4, 8, 16])
    image_size: int = 64
    channels: int = 3
    seed: int = 0

    def __post_init__(self):
        self.dilation_schedule = [int(d) for d in self.dilation_schedule]
        if not self.dilation_schedule:
            raise ValueError("dilation_schedule must not be empty")
        if max(self.dilation_schedule) > 16 or min(self.dilation_schedule) < 1:
            raise ValueError("dilation rates must lie in [1, 16]")
        if self.image_size % 4:
            raise ValueError(f"image_size {self.image_size} must be divisible by 4")
        if self.base_channels < 2 or self.num_gc_blocks < 1 or self.channels < 1:
            raise ValueError("base_channels >= 2, num_gc_blocks >= 1 and channels >= 1 required")

    def dilation(self, block: int) -> int:
        return self.dilation_schedule[block % len(self.dilation_schedule)]


@dataclass
class MaskedBandTriple:
    """Band batches with missing coefficients zeroed, plus known indicators (N, 1, h, w)."""

    low: np.ndarray
    lv2: np.ndarray
    lv1: np.ndarray
    known_low: np.ndarray
    known_lv2: np.ndarray
    known_lv1: np.ndarray


@dataclass
class BandTensors:
    low: Tensor
    lv2: Tensor
    lv1: Tensor


def image_to_bands(images: np.ndarray, dtype=np.float64) -> BandTensors:
    """Two-level broadbands of an ``(N, C, H, W)`` batch (no gradients)."""
    images = np.asarray(images, dtype=dtype)
    ll1, *lv1 = haar_analysis(images)
    ll2, *lv2 = haar_analysis(ll1)
    return BandTensors(Tensor(ll2), Tensor(np.concatenate(lv2, axis=1)), Tensor(np.concatenate(lv1, axis=1)))


def bands_to_image(bands: BandTensors) -> Tensor:
    """Differentiable two-level inverse transform back to ``(N, C, H, W)``."""
    ll1 = F.idwt(concat([bands.low, bands.lv2], axis=1))
    return F.idwt(concat([ll1, bands.lv1], axis=1))


def known_indicator(holes: np.ndarray, factor: int) -> np.ndarray:
    """Min-pool of the known indicator: a coefficient is known iff its support has no hole."""
    n, h, w = holes.shape
    if h % factor or w % factor:
        raise IndivisibleDimension(f"{h}x{w} is not divisible by {factor}")
    blocks = holes.reshape(n, h // factor, factor, w // factor, factor)
    return 1.0 - blocks.max(axis=(2, 4))


def mask_bands(images: np.ndarray, holes: np.ndarray, dtype=np.float32):
    """Package a batch for the generator.

    ``images`` is ``(N, H, W, C)`` in [0, 1]; ``holes`` is ``(N, H, W)`` with 1 marking
    missing pixels.  Returns ``(MaskedBandTriple, ground-truth BandTensors)``.
    """
    images = np.asarray(images, dtype=np.float64)
    holes = np.asarray(holes, dtype=np.float64)
    if images.ndim != 4 or holes.shape != images.shape[:3]:
        raise ShapeMismatch(f"images {images.shape} and holes {holes.shape} disagree")
    if images.shape[1] % 4 or images.shape[2] % 4:
        raise IndivisibleDimension(f"image size {images.shape[1:3]} must be divisible by 4")
    gt = image_to_bands(images.transpose(0, 3, 1, 2))
    k1 = known_indicator(holes, 2)[:, None]
    k2 = known_indicator(holes, 4)[:, None]
    masked = MaskedBandTriple(
        low=(gt.low.data * k2).astype(dtype),
        lv2=(gt.lv2.data * k2).astype(dtype),
        lv1=(gt.lv1.data * k1).astype(dtype),
        known_low=k2.astype(dtype),
        known_lv2=k2.astype(dtype),
        known_lv1=k1.astype(dtype),
    )
    gt = BandTensors(*(Tensor(b.data.astype(dtype)) for b in (gt.low, gt.lv2, gt.lv1)))
    return masked, gt


class GCResBlock(Module):
    """Residual block of two gated convolutions; the first is dilated and sees the mask."""

    def __init__(self, rng, channels: int, dilation: int, dtype=np.float32):
        self.conv1 = GatedConv2d(rng, channels + 1, channels, 3, dilation=dilation, dtype=dtype)
        self.conv2 = GatedConv2d(rng, channels, channels, 3, dtype=dtype)

    def forward(self, x: Tensor, known: Tensor) -> Tensor:
        return x + self.conv2(self.conv1(concat([x, known], axis=1)))


class GCResBlk(Module):
    def __init__(self, rng, channels: int, dilations, dtype=np.float32):
        self.blocks = [GCResBlock(rng, channels, d, dtype) for d in dilations]

    def forward(self, x: Tensor, known: Tensor) -> Tensor:
        for block in self.blocks:
            x = block(x, known)
        return x


def gc_resblk(x: Tensor, mask_channel: Tensor, params: GCResBlk) -> Tensor:
    return params(x, mask_channel)


class Decoder(Module):
    """Two gated convolutions; the last one has a linear feature path."""

    def __init__(self, rng, cin: int, cout: int, dtype=np.float32):
        self.conv1 = GatedConv2d(rng, cin, cin, 3, dtype=dtype)
        self.conv2 = GatedConv2d(rng, cin, cout, 3, activation=identity, dtype=dtype)

    def forward(self, x: Tensor) -> Tensor:
        return self.conv2(self.conv1(x))


class LowBranch(Module):
    def __init__(self, rng, config: GeneratorConfig, dtype=np.float32):
        c, width = config.channels, config.base_channels
        self.encoder = GatedConv2d(rng, c + 1, width, 3, dtype=dtype)
        self.gc = GCResBlk(rng, width, [config.dilation(k) for k in range(config.num_gc_blocks)], dtype)
        self.decoder = Decoder(rng, width, c, dtype)


class HighBranch(Module):
    def __init__(self, rng, cin: int, width: int, band_channels: int, dtype=np.float32):
        self.fran = FRANResBlk(rng, cin, width, band_channels + 1, dtype)
        self.decoder = Decoder(rng, width, band_channels, dtype)


class Generator(Module):
    def __init__(self, config: GeneratorConfig, dtype=np.float32):
        self.config = config
        rng = np.random.default_rng(config.seed)
        width, c = config.base_channels, config.channels
        self.low = LowBranch(rng, config, dtype)
        self.lv2 = HighBranch(rng, width, width, 3 * c, dtype)
        self.lv1 = HighBranch(rng, 2 * width, width, 3 * c, dtype)

    def forward(self, inputs: MaskedBandTriple) -> BandTensors:
        low_in, lv2_in, lv1_in = Tensor(inputs.low), Tensor(inputs.lv2), Tensor(inputs.lv1)
        k_low, k_lv2, k_lv1 = Tensor(inputs.known_low), Tensor(inputs.known_lv2), Tensor(inputs.known_lv1)
        c = self.config.channels
        if low_in.shape[1] != c or lv2_in.shape[1] != 3 * c or lv1_in.shape[1] != 3 * c:
            raise ShapeMismatch("band channel counts do not match the generator config")

        feat_low = self.low.encoder(concat([low_in, k_low], axis=1))
        feat_low = self.low.gc(feat_low, k_low)
        pred_low = self.low.decoder(feat_low)

        feat_lv2 = self.lv2.fran(feat_low, concat([lv2_in, k_lv2], axis=1))
        pred_lv2 = self.lv2.decoder(feat_lv2)

        fused = F.upsample_nearest(concat([feat_low, feat_lv2], axis=1), 2)
        feat_lv1 = self.lv1.fran(fused, concat([lv1_in, k_lv1], axis=1))
        pred_lv1 = self.lv1.decoder(feat_lv1)

        return BandTensors(
            low=composite(low_in, pred_low, k_low),
            lv2=composite(lv2_in, pred_lv2, k_lv2),
            lv1=composite(lv1_in, pred_lv1, k_lv1),
        )


def composite(known_values: Tensor, predicted: Tensor, known: Tensor) -> Tensor:
    return known * known_values + (1.0 - known) * predicted


def generator_forward(inputs: MaskedBandTriple, params: Generator) -> BandTensors:
    return params(inputs)


def inpaint(image: np.ndarray, mask: np.ndarray, params: Generator) -> np.ndarray:
    """Complete the holes (mask == 1) of an ``(H, W, C)`` image in [0, 1].

    Known pixels are copied from the input after reconstruction, since pixels next
    to a hole share wavelet support with regenerated coefficients.
    """
    image = np.asarray(image, dtype=np.float64)
    mask = np.asarray(mask, dtype=np.float64)
    if mask.ndim == 3:
        mask = mask[..., 0]
    if image.ndim != 3 or mask.shape != image.shape[:2]:
        raise ShapeMismatch(f"image {image.shape} and mask {mask.shape} disagree")
    dtype = params.parameters()[0].dtype
    masked, _ = mask_bands(image[None], mask[None], dtype=dtype)
    with no_grad():
        pred = bands_to_image(params(masked)).data[0].transpose(1, 2, 0).astype(np.float64)
    hole = mask[..., None]
    return hole * pred + (1.0 - hole) * image
