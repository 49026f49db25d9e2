"""Orthonormal 2D Haar transform, multi-level pyramids and broadband assembly.

Planes are ``(height, width, channels)`` float64 arrays.  The kernels
``haar_analysis`` / ``haar_synthesis`` work on any array whose last two axes
are spatial, which is what the differentiable nodes in :mod:`wavefill.nn`
reuse on ``(N, C, H, W)`` batches.

Sub-band naming: LH is low-pass along rows and high-pass along columns
(horizontal detail), HL is the transpose (vertical detail), HH is high-pass
on both axes.  Low-pass taps are ``(1, 1)/sqrt(2)``, high-pass taps
``(1, -1)/sqrt(2)``.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from wavefill.errors import (
    CorruptPayload,
    IndivisibleDimension,
    OddDimension,
    ShapeMismatch,
    VersionMismatch,
    WrongLevelCount,
)

INV_SQRT2 = float(1.0 / np.sqrt(2.0))


def haar_analysis(x: np.ndarray):
    """One analysis step over the last two axes. Returns ``(ll, lh, hl, hh)``."""
    if x.shape[-2] % 2 or x.shape[-1] % 2:
        raise OddDimension(f"spatial size {x.shape[-2:]} must be even")
    a = x[..., 0::2, 0::2]
    b = x[..., 0::2, 1::2]
    c = x[..., 1::2, 0::2]
    d = x[..., 1::2, 1::2]
    # filter along rows first, then along columns
    lo_top, hi_top = (a + b) * INV_SQRT2, (a - b) * INV_SQRT2
    lo_bot, hi_bot = (c + d) * INV_SQRT2, (c - d) * INV_SQRT2
    ll = (lo_top + lo_bot) * INV_SQRT2
    lh = (lo_top - lo_bot) * INV_SQRT2
    hl = (hi_top + hi_bot) * INV_SQRT2
    hh = (hi_top - hi_bot) * INV_SQRT2
    return ll, lh, hl, hh


def haar_synthesis(ll, lh, hl, hh) -> np.ndarray:
    """Exact inverse (and transpose) of :func:`haar_analysis`."""
    shape = ll.shape
    if not (lh.shape == hl.shape == hh.shape == shape):
        raise ShapeMismatch(
            f"band shapes disagree: {ll.shape}, {lh.shape}, {hl.shape}, {hh.shape}"
        )
    lo_top = (ll + lh) * INV_SQRT2
    lo_bot = (ll - lh) * INV_SQRT2
    hi_top = (hl + hh) * INV_SQRT2
    hi_bot = (hl - hh) * INV_SQRT2
    dtype = np.result_type(ll, lh, hl, hh)
    out = np.empty(shape[:-2] + (2 * shape[-2], 2 * shape[-1]), dtype=dtype)
    out[..., 0::2, 0::2] = (lo_top + hi_top) * INV_SQRT2
    out[..., 0::2, 1::2] = (lo_top - hi_top) * INV_SQRT2
    out[..., 1::2, 0::2] = (lo_bot + hi_bot) * INV_SQRT2
    out[..., 1::2, 1::2] = (lo_bot - hi_bot) * INV_SQRT2
    return out


def _check_plane(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 3:
        raise ShapeMismatch(f"expected an (H, W, C) plane, got shape {x.shape}")
    return x


def _to_chw(x: np.ndarray) -> np.ndarray:
    return np.moveaxis(x, -1, 0)


def _to_hwc(x: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(np.moveaxis(x, 0, -1))


@dataclass
class WaveletLevel:
    ll: np.ndarray
    lh: np.ndarray
    hl: np.ndarray
    hh: np.ndarray


@dataclass
class WaveletPyramid:
    """``ll`` is the coarsest approximation; ``details[n - 1]`` holds level n."""

    ll: np.ndarray
    details: list = field(default_factory=list)

    @property
    def levels(self) -> int:
        return len(self.details)

    def planes(self):
        yield self.ll
        for triple in self.details:
            yield from triple


@dataclass
class BandTriple:
    low_freq: np.ndarray
    lv2_high: np.ndarray
    lv1_high: np.ndarray


def dwt2_level(x) -> WaveletLevel:
    x = _check_plane(x)
    ll, lh, hl, hh = haar_analysis(_to_chw(x))
    return WaveletLevel(_to_hwc(ll), _to_hwc(lh), _to_hwc(hl), _to_hwc(hh))


def idwt2_level(level: WaveletLevel) -> np.ndarray:
    bands = [_check_plane(b) for b in (level.ll, level.lh, level.hl, level.hh)]
    return _to_hwc(haar_synthesis(*(_to_chw(b) for b in bands)))


def decompose(image, n_levels: int) -> WaveletPyramid:
    image = _check_plane(image)
    if n_levels < 1:
        raise WrongLevelCount(f"n_levels must be >= 1, got {n_levels}")
    h, w, _ = image.shape
    step = 2**n_levels
    if h % step or w % step:
        raise IndivisibleDimension(f"{h}x{w} is not divisible by 2^{n_levels}")
    details = []
    running = _to_chw(image)
    for _ in range(n_levels):
        running, lh, hl, hh = haar_analysis(running)
        details.append((_to_hwc(lh), _to_hwc(hl), _to_hwc(hh)))
    return WaveletPyramid(_to_hwc(running), details)


def _check_pyramid(pyramid: WaveletPyramid) -> None:
    if pyramid.levels < 1:
        raise WrongLevelCount("pyramid has no detail levels")
    h, w, c = _check_plane(pyramid.ll).shape
    n = pyramid.levels
    for level, triple in enumerate(pyramid.details, start=1):
        scale = 2 ** (n - level)
        expected = (h * scale, w * scale, c)
        for plane in triple:
            if np.shape(plane) != expected:
                raise ShapeMismatch(
                    f"level {level} plane has shape {np.shape(plane)}, expected {expected}"
                )


def reconstruct(pyramid: WaveletPyramid) -> np.ndarray:
    _check_pyramid(pyramid)
    running = _to_chw(_check_plane(pyramid.ll))
    for lh, hl, hh in reversed(pyramid.details):
        running = haar_synthesis(running, *(_to_chw(_check_plane(b)) for b in (lh, hl, hh)))
    return _to_hwc(running)


def assemble_bands(pyramid: WaveletPyramid) -> BandTriple:
    """Group a 2-level pyramid into LowFreq, Lv2-HighFreq and Lv1-HighFreq."""
    if pyramid.levels != 2:
        raise WrongLevelCount(f"broadband assembly needs 2 levels, got {pyramid.levels}")
    _check_pyramid(pyramid)
    lv1, lv2 = pyramid.details
    return BandTriple(
        low_freq=np.array(pyramid.ll, dtype=np.float64),
        lv2_high=np.concatenate(lv2, axis=-1),
        lv1_high=np.concatenate(lv1, axis=-1),
    )


def disassemble_bands(bands: BandTriple) -> WaveletPyramid:
    low = _check_plane(bands.low_freq)
    lv2 = _check_plane(bands.lv2_high)
    lv1 = _check_plane(bands.lv1_high)
    h, w, c = low.shape
    if lv2.shape != (h, w, 3 * c) or lv1.shape != (2 * h, 2 * w, 3 * c):
        raise ShapeMismatch(
            f"inconsistent broadbands: {low.shape}, {lv2.shape}, {lv1.shape}"
        )
    split = lambda band: tuple(np.array(p) for p in np.split(band, 3, axis=-1))  # noqa: E731
    return WaveletPyramid(np.array(low), [split(lv1), split(lv2)])


# -- serialization ----------------------------------------------------------

PYRAMID_MAGIC = b"WFPYR\x00"
PYRAMID_VERSION = 1


def save_pyramid(path, pyramid: WaveletPyramid) -> None:
    """Write ``n_levels``, one ``(h, w, c)`` header per plane and float64 LE payloads.

    Plane order is LL, then (LH, HL, HH) for level 1, 2, ...
    """
    _check_pyramid(pyramid)
    chunks = [PYRAMID_MAGIC, struct.pack("<HI", PYRAMID_VERSION, pyramid.levels)]
    for plane in pyramid.planes():
        plane = _check_plane(plane)
        chunks.append(struct.pack("<III", *plane.shape))
        chunks.append(plane.astype("<f8").tobytes())
    Path(path).write_bytes(b"".join(chunks))


def load_pyramid(path) -> WaveletPyramid:
    blob = Path(path).read_bytes()
    if not blob.startswith(PYRAMID_MAGIC):
        raise CorruptPayload(f"{path}: not a pyramid file")
    offset = len(PYRAMID_MAGIC)
    try:
        version, n_levels = struct.unpack_from("<HI", blob, offset)
        if version != PYRAMID_VERSION:
            raise VersionMismatch(f"pyramid version {version}, expected {PYRAMID_VERSION}")
        offset += struct.calcsize("<HI")
        planes = []
        for _ in range(3 * n_levels + 1):
            shape = struct.unpack_from("<III", blob, offset)
            offset += 12
            count = shape[0] * shape[1] * shape[2]
            if offset + 8 * count > len(blob):
                raise CorruptPayload(f"{path}: truncated plane payload")
            data = np.frombuffer(blob, dtype="<f8", count=count, offset=offset)
            planes.append(data.reshape(shape).astype(np.float64))
            offset += 8 * count
    except struct.error as exc:
        raise CorruptPayload(f"{path}: truncated header") from exc
    if offset != len(blob):
        raise CorruptPayload(f"{path}: {len(blob) - offset} trailing bytes")
    details = [tuple(planes[1 + 3 * i : 4 + 3 * i]) for i in range(n_levels)]
    pyramid = WaveletPyramid(planes[0], details)
    _check_pyramid(pyramid)
    return pyramid
