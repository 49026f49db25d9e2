"""Hole masks.  Pixel-domain masks are ``(H, W, 1)`` planes with 1 marking missing pixels."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from PIL import Image, ImageDraw

from wavefill.errors import IndivisibleDimension

COVERAGE_BUCKETS = ((0.1, 0.2), (0.2, 0.3), (0.3, 0.4), (0.4, 0.5))


@dataclass
class MaskSpec:
    kind: str = "freeform"  # "central_square" | "freeform"
    size: int = 64
    min_strokes: int = 1
    max_strokes: int = 5
    max_vertices: int = 8
    min_width: float = 4.0  # at 64 px; scaled linearly with size
    max_width: float = 12.0
    max_angle: float = 2 * math.pi / 5
    max_length: float = 24.0  # at 64 px
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("central_square", "freeform"):
            raise ValueError(f"unknown mask kind {self.kind!r}")
        if self.size < 2 or self.max_strokes < self.min_strokes or self.min_strokes < 0:
            raise ValueError("invalid mask spec")


def gen_square_mask(image_size: int) -> np.ndarray:
    """Centered square hole with half the image side."""
    side = image_size // 2
    start = (image_size - side) // 2
    mask = np.zeros((image_size, image_size, 1))
    mask[start:start + side, start:start + side] = 1.0
    return mask


def random_rectangle_mask(image_size: int, rng: np.random.Generator,
                          min_frac: float = 0.25, max_frac: float = 0.5) -> np.ndarray:
    h = int(rng.integers(int(min_frac * image_size), int(max_frac * image_size) + 1))
    w = int(rng.integers(int(min_frac * image_size), int(max_frac * image_size) + 1))
    y = int(rng.integers(0, image_size - h + 1))
    x = int(rng.integers(0, image_size - w + 1))
    mask = np.zeros((image_size, image_size, 1))
    mask[y:y + h, x:x + w] = 1.0
    return mask


def gen_freeform_mask(spec: MaskSpec, rng: np.random.Generator | None = None) -> np.ndarray:
    """Union of random thick polylines with round joints, reproducible from ``spec.seed``."""
    rng = np.random.default_rng(spec.seed) if rng is None else rng
    size = spec.size
    scale = size / 64.0
    canvas = Image.new("L", (size, size), 0)
    draw = ImageDraw.Draw(canvas)
    n_strokes = int(rng.integers(spec.min_strokes, spec.max_strokes + 1))
    for _ in range(n_strokes):
        width = rng.uniform(spec.min_width, spec.max_width) * scale
        n_vertices = int(rng.integers(2, max(spec.max_vertices, 2) + 1))
        x, y = rng.uniform(0, size, size=2)
        angle = rng.uniform(0, 2 * math.pi)
        points = [(x, y)]
        for _ in range(n_vertices - 1):
            angle += rng.uniform(-spec.max_angle, spec.max_angle)
            length = rng.uniform(0.3, 1.0) * spec.max_length * scale
            x = float(np.clip(x + length * math.cos(angle), 0, size - 1))
            y = float(np.clip(y + length * math.sin(angle), 0, size - 1))
            points.append((x, y))
        draw.line(points, fill=255, width=max(1, int(round(width))))
        r = width / 2
        for px, py in points:
            draw.ellipse((px - r, py - r, px + r, py + r), fill=255)
    return (np.asarray(canvas) > 127).astype(np.float64)[..., None]


def coverage_ratio(mask: np.ndarray) -> float:
    return float(np.mean(np.asarray(mask) > 0.5))


def coverage_bucket(ratio: float) -> str | None:
    """The ``"10-20%"``-style category a hole ratio falls in, or None outside 10-50%."""
    for lo, hi in COVERAGE_BUCKETS:
        if lo <= ratio < hi:
            return f"{round(lo * 100)}-{round(hi * 100)}%"
    return None


def gen_mask(spec: MaskSpec) -> np.ndarray:
    if spec.kind == "central_square":
        return gen_square_mask(spec.size)
    return gen_freeform_mask(spec)


def mask_to_wavelet_domain(mask: np.ndarray, n_levels: int) -> list:
    """Known indicators per level (index 0 is level 1), each ``(H/2^n, W/2^n)``.

    A coefficient is known iff no pixel of its ``2^n x 2^n`` Haar support is missing.
    """
    hole = np.asarray(mask, dtype=np.float64)
    if hole.ndim == 3:
        hole = hole[..., 0]
    h, w = hole.shape
    if h % 2**n_levels or w % 2**n_levels:
        raise IndivisibleDimension(f"{h}x{w} is not divisible by 2^{n_levels}")
    known = 1.0 - (hole > 0.5)
    levels = []
    for _ in range(n_levels):
        h, w = h // 2, w // 2
        known = known.reshape(h, 2, w, 2).min(axis=(1, 3))
        levels.append(known)
    return levels
