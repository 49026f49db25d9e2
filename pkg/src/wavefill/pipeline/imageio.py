"""Image and mask files: 8-bit PPM/PGM/PNG through Pillow, ``.npy`` for lossless floats."""
from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image


def read_image(path) -> np.ndarray:
    """``(H, W, C)`` float64 in [0, 1]; grayscale files give ``C = 1``."""
    path = Path(path)
    if path.suffix == ".npy":
        data = np.load(path).astype(np.float64)
        return data[..., None] if data.ndim == 2 else data
    with Image.open(path) as img:
        mode = "L" if img.mode in ("1", "L", "I", "I;16", "F") else "RGB"
        data = np.asarray(img.convert(mode), dtype=np.float64) / 255.0
    return data[..., None] if data.ndim == 2 else data


def write_image(path, image: np.ndarray) -> None:
    path = Path(path)
    image = np.asarray(image, dtype=np.float64)
    if path.suffix == ".npy":
        np.save(path, image)
        return
    pixels = np.round(np.clip(image, 0.0, 1.0) * 255.0).astype(np.uint8)
    if pixels.ndim == 3 and pixels.shape[2] == 1:
        pixels = pixels[..., 0]
    Image.fromarray(pixels).save(path)


def read_mask(path) -> np.ndarray:
    """Binary ``(H, W, 1)`` hole mask (1 = missing); multi-channel files use their mean."""
    data = read_image(path)
    return (data.mean(axis=2, keepdims=True) > 0.5).astype(np.float64)
