import numpy as np
import pytest

from wavefill.errors import IndivisibleDimension, ShapeMismatch
from wavefill.generator import (
    GCResBlk,
    Generator,
    GeneratorConfig,
    bands_to_image,
    composite,
    gc_resblk,
    generator_forward,
    image_to_bands,
    inpaint,
    known_indicator,
    mask_bands,
)
from wavefill.losses import loss_lf
from wavefill.nn.gradcheck import check_gradients
from wavefill.nn.module import Parameter
from wavefill.nn.tensor import Tensor, tsum
from wavefill.wavelet import assemble_bands, decompose

TINY = dict(base_channels=8, num_gc_blocks=2, dilation_schedule=[1, 2])


def toy(n=2, size=16, seed=0):
    rng = np.random.default_rng(seed)
    images = rng.uniform(size=(n, size, size, 3))
    holes = np.zeros((n, size, size))
    holes[:, size // 4:3 * size // 4, size // 4:size // 2] = 1
    return images, holes


def test_config_validation():
    assert GeneratorConfig().dilation(5) == 4
    with pytest.raises(ValueError):
        GeneratorConfig(dilation_schedule=[32])
    with pytest.raises(ValueError):
        GeneratorConfig(image_size=30)


def test_bands_agree_with_plane_transform():
    images, _ = toy(1)
    bands = image_to_bands(images.transpose(0, 3, 1, 2))
    ref = assemble_bands(decompose(images[0], 2))
    np.testing.assert_allclose(bands.low.data[0].transpose(1, 2, 0), ref.low_freq, atol=1e-12)
    np.testing.assert_allclose(bands.lv2.data[0].transpose(1, 2, 0), ref.lv2_high, atol=1e-12)
    np.testing.assert_allclose(bands.lv1.data[0].transpose(1, 2, 0), ref.lv1_high, atol=1e-12)
    np.testing.assert_allclose(bands_to_image(bands).data, images.transpose(0, 3, 1, 2), atol=1e-12)


def test_known_indicator_min_pools():
    holes = np.zeros((1, 4, 4))
    holes[0, 1, 1] = 1
    np.testing.assert_array_equal(known_indicator(holes, 2)[0], [[0, 1], [1, 1]])
    with pytest.raises(IndivisibleDimension):
        known_indicator(np.zeros((1, 6, 6)), 4)


def test_mask_bands_zeroes_missing():
    images, holes = toy()
    masked, gt = mask_bands(images, holes, dtype=np.float64)
    assert np.all(masked.low[np.broadcast_to(masked.known_low == 0, masked.low.shape)] == 0)
    np.testing.assert_array_equal(masked.lv1 * masked.known_lv1, gt.lv1.data * masked.known_lv1)
    with pytest.raises(ShapeMismatch):
        mask_bands(images, holes[:, :8])
    with pytest.raises(IndivisibleDimension):
        mask_bands(images[:, :14, :14], holes[:, :14, :14])


def test_output_shapes_64():
    gen = Generator(GeneratorConfig(base_channels=8, num_gc_blocks=1))
    images, holes = toy(1, 64)
    masked, gt = mask_bands(images, holes)
    out = generator_forward(masked, gen)
    assert out.low.shape == (1, 3, 16, 16) == gt.low.shape
    assert out.lv2.shape == (1, 9, 16, 16) == gt.lv2.shape
    assert out.lv1.shape == (1, 9, 32, 32) == gt.lv1.shape
    assert all(p.dtype == np.float32 for p in gen.parameters())


def test_zero_mask_is_identity():
    gen = Generator(GeneratorConfig(**TINY, image_size=16))
    images, _ = toy()
    masked, gt = mask_bands(images, np.zeros((2, 16, 16)))
    out = gen(masked)
    for name in ("low", "lv2", "lv1"):
        np.testing.assert_array_equal(getattr(out, name).data, getattr(gt, name).data)


def test_known_coefficients_preserved():
    gen = Generator(GeneratorConfig(**TINY, image_size=16))
    masked, gt = mask_bands(*toy())
    out = gen(masked)
    for name, known in (("low", masked.known_low), ("lv2", masked.known_lv2), ("lv1", masked.known_lv1)):
        sel = np.broadcast_to(known > 0.5, out.__dict__[name].shape)
        assert np.max(np.abs(getattr(out, name).data[sel] - getattr(gt, name).data[sel])) < 1e-6


def test_composite():
    out = composite(Tensor(np.array([1.0, 2.0])), Tensor(np.array([5.0, 6.0])), Tensor(np.array([1.0, 0.0])))
    np.testing.assert_array_equal(out.data, [1.0, 6.0])


def test_gradient_coverage():
    gen = Generator(GeneratorConfig(**TINY, image_size=16), dtype=np.float64)
    masked, gt = mask_bands(*toy(), dtype=np.float64)
    out = gen(masked)
    loss = tsum(bands_to_image(out) * Tensor(np.random.default_rng(1).normal(size=(2, 3, 16, 16))))
    loss.backward()
    # key biases shift every logit of a softmax row equally, so their gradient is exactly zero
    dead = [n for n, p in gen.named_parameters() if "key.bias" not in n and (p.grad is None or not np.any(p.grad))]
    assert not dead


def test_gc_resblk_zeroed_is_identity():
    rng = np.random.default_rng(2)
    blk = GCResBlk(rng, 4, [2, 4], np.float64)
    for b in blk.blocks:
        b.conv2.feature.weight.data[:] = 0
        b.conv2.feature.bias.data[:] = 0
    x = Tensor(rng.normal(size=(1, 4, 8, 8)))
    np.testing.assert_array_equal(gc_resblk(x, Tensor(np.ones((1, 1, 8, 8))), blk).data, x.data)


def test_gc_resblk_receptive_field():
    dilations = [2, 4, 8]
    blk = GCResBlk(np.random.default_rng(3), 4, dilations, np.float64)
    size = 96
    x = Parameter(np.random.default_rng(4).normal(size=(1, 4, size, size)))
    out = gc_resblk(x, Tensor(np.ones((1, 1, size, size))), blk)
    probe = np.zeros(out.shape)
    probe[0, :, size // 2, size // 2] = 1.0
    tsum(out * Tensor(probe)).backward()
    rows = np.nonzero(np.abs(x.grad).sum(axis=(0, 1, 3)))[0]
    extent = rows.max() - rows.min() + 1
    # each block: dilated 3x3 then a plain 3x3
    bound = 2 * sum(d + 1 for d in dilations) + 1
    assert extent >= bound
    assert extent >= 2 * sum(d * (3 - 1) // 2 for d in dilations) + 1


def test_gc_resblk_gradients_8x8():
    rng = np.random.default_rng(5)
    blk = GCResBlk(rng, 4, [1, 2], np.float64)
    x = Parameter(rng.normal(size=(1, 4, 8, 8)))
    known = Tensor((rng.uniform(size=(1, 1, 8, 8)) > 0.3).astype(float))
    r = Tensor(rng.normal(size=(1, 4, 8, 8)))
    err = check_gradients(lambda: tsum(gc_resblk(x, known, blk) * r), [x] + blk.parameters(),
                          max_entries=10, rng=np.random.default_rng(0))
    assert err < 1e-4


def test_end_to_end_generator_l1_gradients_16x16():
    gen = Generator(GeneratorConfig(base_channels=16, num_gc_blocks=1, dilation_schedule=[2], image_size=16),
                    dtype=np.float64)
    images, holes = toy(1, 16, seed=7)
    masked, gt = mask_bands(images, holes, dtype=np.float64)
    target = Tensor(images.transpose(0, 3, 1, 2))

    def fn():
        out = gen(masked)
        return loss_lf(bands_to_image(out), target) + loss_lf(out.low, gt.low)

    named = [(n, p) for n, p in gen.named_parameters() if "key.bias" not in n]
    err = check_gradients(fn, [p for _, p in named], max_entries=3, rng=np.random.default_rng(1))
    assert err < 1e-3


def test_channel_mismatch():
    gen = Generator(GeneratorConfig(**TINY, image_size=16))
    masked, _ = mask_bands(*toy())
    masked.lv2 = masked.lv2[:, :6]
    with pytest.raises(ShapeMismatch):
        gen(masked)


def test_inpaint_contract():
    gen = Generator(GeneratorConfig(**TINY, image_size=16))
    images, holes = toy(1)
    full = inpaint(images[0], np.zeros((16, 16)), gen)
    assert np.max(np.abs(full - images[0])) < 1e-6
    half = np.zeros((16, 16, 1))
    half[:, 8:] = 1
    out = inpaint(images[0], half, gen)
    assert np.all(np.isfinite(out))
    assert np.max(np.abs(out[:, :8] - images[0][:, :8])) < 1e-6
    with pytest.raises(ShapeMismatch):
        inpaint(images[0], np.zeros((8, 8)), gen)


def test_determinism():
    def run():
        gen = Generator(GeneratorConfig(**TINY, image_size=16, seed=3))
        masked, _ = mask_bands(*toy())
        out = gen(masked)
        tsum(out.lv1 * out.lv1).backward()
        return [out.low.data, out.lv1.data] + [p.grad for p in gen.parameters() if p.grad is not None]

    a, b = run(), run()
    assert all(x.tobytes() == y.tobytes() for x, y in zip(a, b))
