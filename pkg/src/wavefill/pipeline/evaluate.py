"""Compare a generator against the zero-fill baseline on held-out toy images."""
from __future__ import annotations

import numpy as np

from wavefill.generator import BandTensors, Generator, bands_to_image, mask_bands
from wavefill.nn.tensor import Tensor, no_grad
from wavefill.pipeline.data import toy_batch
from wavefill.pipeline.masks import gen_square_mask
from wavefill.pipeline.metrics import metric_emd_band_hist, metric_l1, metric_psnr, metric_ssim


def zero_fill(masked) -> BandTensors:
    """Missing coefficients left at zero."""
    return BandTensors(Tensor(masked.low), Tensor(masked.lv2), Tensor(masked.lv1))


def eval_set(seed: int, count: int, size: int, kinds=("stripes", "checker")):
    rng = np.random.default_rng([seed, 999_999])
    images = toy_batch(rng, count, size, kinds)
    holes = np.repeat(gen_square_mask(size)[None, ..., 0], count, axis=0)
    return images, holes


def _missing(values: np.ndarray, known: np.ndarray) -> np.ndarray:
    mask = np.broadcast_to(known < 0.5, values.shape)
    return values[mask]


def compare_to_zero_fill(generator: Generator, images: np.ndarray, holes: np.ndarray, bins: int = 64) -> dict:
    """Per-method metrics: hole-region l1 (%), PSNR, SSIM and missing-coefficient band EMDs."""
    dtype = generator.parameters()[0].dtype
    masked, gt = mask_bands(images, holes, dtype=dtype)
    with no_grad():
        model = generator(masked)
    methods = {"model": model, "zero_fill": zero_fill(masked)}
    results = {}
    for name, bands in methods.items():
        with no_grad():
            pred = bands_to_image(bands).data.transpose(0, 2, 3, 1).astype(np.float64)
        hole = holes[..., None]
        pred = hole * pred + (1.0 - hole) * images
        results[name] = {
            "l1_percent": float(np.mean([metric_l1(p, g, h) for p, g, h in zip(pred, images, holes)])),
            "psnr_db": float(np.mean([metric_psnr(p, g, h) for p, g, h in zip(pred, images, holes)])),
            "ssim": float(np.mean([metric_ssim(np.clip(p, 0, 1), g) for p, g in zip(pred, images)])),
            "emd_low": metric_emd_band_hist(
                _missing(bands.low.data, masked.known_low), _missing(gt.low.data, masked.known_low), bins),
            "emd_high_lv2": metric_emd_band_hist(
                _missing(bands.lv2.data, masked.known_lv2), _missing(gt.lv2.data, masked.known_lv2), bins),
            "emd_high_lv1": metric_emd_band_hist(
                _missing(bands.lv1.data, masked.known_lv1), _missing(gt.lv1.data, masked.known_lv1), bins),
        }
    return results
