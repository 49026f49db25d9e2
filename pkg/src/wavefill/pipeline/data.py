"""Procedural toy images and per-step batch sampling."""
from __future__ import annotations

import numpy as np

from wavefill.pipeline.masks import gen_freeform_mask, MaskSpec, random_rectangle_mask

KINDS = ("stripes", "checker", "gradient", "blobs")


def _two_colors(rng):
    base = rng.uniform(0.15, 0.85, size=3)
    offset = rng.uniform(0.25, 0.5, size=3) * rng.choice([-1.0, 1.0], size=3)
    return base, np.clip(base + offset, 0.0, 1.0)


def _profile(phase, sharpness):
    # smoothed square wave in [0, 1]
    return 0.5 + 0.5 * np.tanh(sharpness * np.sin(phase)) / np.tanh(sharpness)


def toy_image(rng: np.random.Generator, size: int = 64, kind: str = "stripes") -> np.ndarray:
    """One ``(size, size, 3)`` image in [0, 1]."""
    yy, xx = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
    c0, c1 = _two_colors(rng)
    scale = size / 64.0
    if kind == "stripes":
        theta = rng.uniform(0, np.pi)
        period = rng.uniform(10, 20) * scale
        u = xx * np.cos(theta) + yy * np.sin(theta)
        t = _profile(2 * np.pi * u / period + rng.uniform(0, 2 * np.pi), 3.0)
    elif kind == "checker":
        theta = rng.uniform(0, np.pi / 2)
        period = rng.uniform(12, 24) * scale
        u = xx * np.cos(theta) + yy * np.sin(theta)
        v = -xx * np.sin(theta) + yy * np.cos(theta)
        phase = rng.uniform(0, 2 * np.pi, size=2)
        pu = _profile(2 * np.pi * u / period + phase[0], 3.0)
        pv = _profile(2 * np.pi * v / period + phase[1], 3.0)
        t = pu * pv + (1 - pu) * (1 - pv)
    elif kind == "gradient":
        theta = rng.uniform(0, 2 * np.pi)
        u = (xx - size / 2) * np.cos(theta) + (yy - size / 2) * np.sin(theta)
        t = np.clip(0.5 + u / size, 0.0, 1.0)
    elif kind == "blobs":
        centers = rng.uniform(0, size, size=(3, 2))
        radii = rng.uniform(6, 16, size=3) * scale
        t = np.zeros((size, size))
        for (cy, cx), r in zip(centers, radii):
            t = np.maximum(t, 0.5 + 0.5 * np.tanh(r - np.hypot(yy - cy, xx - cx)))
    else:
        raise ValueError(f"unknown toy image kind {kind!r}")
    image = c0 + (c1 - c0) * t[..., None]
    return np.clip(image, 0.0, 1.0)


def toy_batch(rng: np.random.Generator, batch: int, size: int = 64, kinds=("stripes", "checker")) -> np.ndarray:
    kinds = list(kinds)
    return np.stack([toy_image(rng, size, kinds[int(rng.integers(len(kinds)))]) for _ in range(batch)])


def training_masks(rng: np.random.Generator, batch: int, size: int = 64) -> np.ndarray:
    """Half random rectangles, half free-form strokes; never empty. Shape ``(N, H, W)``."""
    masks = []
    for _ in range(batch):
        if rng.random() < 0.5:
            m = random_rectangle_mask(size, rng)
        else:
            m = gen_freeform_mask(MaskSpec(size=size), rng)
        if not m.any():
            m = random_rectangle_mask(size, rng)
        masks.append(m[..., 0])
    return np.stack(masks)


def sample_batch(seed: int, step: int, batch: int, size: int = 64, kinds=("stripes", "checker")):
    """``(images (N, H, W, 3), holes (N, H, W))`` determined by ``(seed, step)`` alone."""
    rng = np.random.default_rng([seed, step])
    images = toy_batch(rng, batch, size, kinds)
    return images, training_masks(rng, batch, size)
