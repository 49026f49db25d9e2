"""Image quality metrics and the band-histogram EMD diagnostic.

Images are ``(H, W, C)`` arrays in [0, 1].  Masked variants take a hole mask
(1 = missing) and average over hole pixels only.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from skimage.metrics import structural_similarity

from wavefill.errors import ShapeMismatch
from wavefill.wavelet import assemble_bands, decompose

PSNR_CAP = 99.0
SSIM_WINDOW = 51


@dataclass
class MetricsReport:
    mean_l1_percent: float
    psnr_db: float
    ssim: float
    emd_low: float
    emd_high_lv1: float
    emd_high_lv2: float

    def as_dict(self) -> dict:
        return asdict(self)


def _pair(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeMismatch(f"{a.shape} vs {b.shape}")
    if a.ndim == 2:
        a, b = a[..., None], b[..., None]
    return a, b


def _hole_weights(mask, shape) -> np.ndarray:
    m = np.asarray(mask, dtype=np.float64)
    if m.ndim == 2:
        m = m[..., None]
    return np.broadcast_to(m > 0.5, shape)


def metric_l1(a, b, mask=None) -> float:
    """Mean absolute error in percent of the [0, 1] range."""
    a, b = _pair(a, b)
    diff = np.abs(a - b)
    if mask is not None:
        diff = diff[_hole_weights(mask, a.shape)]
    return 100.0 * float(diff.mean())


def metric_psnr(a, b, mask=None, cap: float = PSNR_CAP) -> float:
    a, b = _pair(a, b)
    sq = (a - b) ** 2
    if mask is not None:
        sq = sq[_hole_weights(mask, a.shape)]
    mse = float(sq.mean())
    if mse == 0.0:
        return cap
    return min(cap, 10.0 * np.log10(1.0 / mse))


def _window(a: np.ndarray, window: int) -> int:
    side = min(a.shape[0], a.shape[1], window)
    return side if side % 2 else side - 1


def metric_ssim(a, b, window: int = SSIM_WINDOW, mask=None) -> float:
    """Mean SSIM with a uniform window (clipped to the image size), C1=0.01^2, C2=0.03^2."""
    a, b = _pair(a, b)
    win = _window(a, window)
    score, ssim_map = structural_similarity(
        a, b, win_size=win, data_range=1.0, channel_axis=-1, full=True, K1=0.01, K2=0.03,
    )
    if mask is None:
        return float(score)
    return float(ssim_map[_hole_weights(mask, a.shape)].mean())


def emd_1d(p, q, bin_width: float = 1.0) -> float:
    """Earth mover's distance between two histograms on the same uniform bins."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    p = p / p.sum()
    q = q / q.sum()
    return float(np.abs(np.cumsum(p - q)).sum() * bin_width)


def band_histograms(pred, gt, bins: int = 64):
    """Normalized histograms of both coefficient sets on their joint range."""
    pred = np.asarray(pred, dtype=np.float64).ravel()
    gt = np.asarray(gt, dtype=np.float64).ravel()
    lo = min(pred.min(), gt.min())
    hi = max(pred.max(), gt.max())
    if hi <= lo:
        return None
    hp, edges = np.histogram(pred, bins=bins, range=(lo, hi))
    hg, _ = np.histogram(gt, bins=bins, range=(lo, hi))
    return hp / hp.sum(), hg / hg.sum(), edges[1] - edges[0]


def metric_emd_band_hist(pred, gt, bins: int = 64) -> float:
    """EMD between coefficient histograms; 0 when every coefficient is the same value."""
    if bins < 2:
        raise ValueError("need at least 2 bins")
    hists = band_histograms(pred, gt, bins)
    if hists is None:
        return 0.0
    hp, hg, width = hists
    return emd_1d(hp, hg, width)


def band_emds(pred_image, gt_image, bins: int = 64) -> tuple:
    """``(low, lv1_high, lv2_high)`` histogram EMDs of two images' broadbands."""
    pb = assemble_bands(decompose(pred_image, 2))
    gb = assemble_bands(decompose(gt_image, 2))
    return (
        metric_emd_band_hist(pb.low_freq, gb.low_freq, bins),
        metric_emd_band_hist(pb.lv1_high, gb.lv1_high, bins),
        metric_emd_band_hist(pb.lv2_high, gb.lv2_high, bins),
    )


def evaluate_pair(pred, gt, mask=None, bins: int = 64) -> MetricsReport:
    emd_low, emd_lv1, emd_lv2 = band_emds(pred, gt, bins)
    return MetricsReport(
        mean_l1_percent=metric_l1(pred, gt, mask),
        psnr_db=metric_psnr(pred, gt, mask),
        ssim=metric_ssim(pred, gt, mask=mask),
        emd_low=emd_low,
        emd_high_lv1=emd_lv1,
        emd_high_lv2=emd_lv2,
    )
