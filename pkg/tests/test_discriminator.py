import numpy as np
import pytest

from wavefill.discriminator import (
    Discriminator,
    DiscriminatorConfig,
    SelfAttention,
    crop_resize_matrix,
    discriminate,
    expand_bbox,
    hole_bbox,
    self_attention_layer,
)
from wavefill.errors import EmptyBBox, ShapeMismatch
from wavefill.losses import loss_d_hinge
from wavefill.nn.gradcheck import check_gradients
from wavefill.nn.module import Parameter
from wavefill.nn.tensor import Tensor, leaky_relu, tsum
from wavefill.pipeline.train import build_models
from wavefill.generator import GeneratorConfig


def small_disc(seed=1, dtype=np.float64, **kw):
    return Discriminator(DiscriminatorConfig(in_channels=9, base_channels=4, seed=seed, **kw), dtype)


def test_patch_grid_shapes_on_32x32_band():
    disc = small_disc()
    out = disc(Tensor(np.random.default_rng(0).normal(size=(2, 9, 32, 32))), [(8, 8, 24, 24)] * 2)
    # four stride-2 layers: 32 -> 16 -> 8 -> 4 -> 2; local crop 16 -> 1
    assert out.global_scores.shape == (2, 1, 2, 2)
    assert out.local_scores.shape == (2, 1, 1, 1)
    assert [a.shape[1:] for a in out.activations[:4]] == [(4, 16, 16), (8, 8, 8), (16, 4, 4), (32, 2, 2)]
    assert len(out.activations) == 8


def test_zero_final_conv_gives_hinge_two():
    disc = small_disc()
    for net in (disc.global_net, disc.local_net):
        net.final.weight.data[:] = 0
        net.final.bias.data[:] = 0
    rng = np.random.default_rng(1)
    real = discriminate(Tensor(rng.normal(size=(1, 9, 16, 16))), [(2, 2, 9, 9)], disc)
    fake = discriminate(Tensor(rng.normal(size=(1, 9, 16, 16))), [(2, 2, 9, 9)], disc)
    assert all(np.all(s.data == 0) for s in real.patch_scores + fake.patch_scores)
    assert loss_d_hinge(real, fake).item() == 2.0


def test_self_attention_identity_at_init():
    rng = np.random.default_rng(2)
    layer = SelfAttention(rng, 16, np.float64)
    x = Tensor(rng.normal(size=(2, 16, 3, 5)))
    np.testing.assert_array_equal(self_attention_layer(x, layer).data, x.data)
    weights = layer.attention(x).data
    assert np.max(np.abs(weights.sum(axis=-1) - 1)) < 1e-12


def test_self_attention_matches_double_loop():
    rng = np.random.default_rng(3)
    layer = SelfAttention(rng, 8, np.float64)
    layer.gamma.data[:] = 0.7
    x = rng.normal(size=(1, 8, 2, 2))
    out = layer(Tensor(x)).data[0].reshape(8, 4)
    flat = x[0].reshape(8, 4)
    q = layer.query.weight.data[:, :, 0, 0] @ flat + layer.query.bias.data[:, None]
    k = layer.key.weight.data[:, :, 0, 0] @ flat + layer.key.bias.data[:, None]
    v = layer.value.weight.data[:, :, 0, 0] @ flat + layer.value.bias.data[:, None]
    brute = flat.copy()
    for i in range(4):
        logits = np.array([q[:, i] @ k[:, j] for j in range(4)])
        w = np.exp(logits - logits.max())
        w /= w.sum()
        for j in range(4):
            brute[:, i] += 0.7 * w[j] * v[:, j]
    np.testing.assert_allclose(out, brute, atol=1e-12)


def test_activations_reproduce_scores():
    disc = small_disc()
    band = Tensor(np.random.default_rng(4).normal(size=(1, 9, 16, 16)))
    out = disc(band, [(3, 3, 10, 12)])
    x = band
    for conv, act in zip(disc.global_net.convs, out.activations[:4]):
        x = leaky_relu(conv(x), 0.2)
        np.testing.assert_array_equal(x.data, act.data)
    scores = disc.global_net.final(disc.global_net.attention(out.activations[3]))
    np.testing.assert_array_equal(scores.data, out.global_scores.data)


def test_bbox_helpers():
    known = np.ones((8, 8))
    known[2:5, 3:7] = 0
    assert hole_bbox(known) == (2, 3, 5, 7)
    with pytest.raises(EmptyBBox):
        hole_bbox(np.ones((4, 4)))
    assert expand_bbox((2, 2, 6, 6), 8, 8, 0.25) == (1, 1, 7, 7)
    assert expand_bbox((0, 0, 8, 8), 8, 8, 0.25) == (0, 0, 8, 8)
    with pytest.raises(EmptyBBox):
        expand_bbox((3, 3, 3, 5), 8, 8, 0.25)


def test_crop_resize_matrix_rows_are_convex():
    m = crop_resize_matrix(2, 10, 16, 4)
    np.testing.assert_allclose(m.sum(axis=1), 1.0)
    assert np.all(m[:, :2] == 0) and np.all(m[:, 10:] == 0)
    # exact 2x box average on a linear ramp
    ramp = np.arange(16.0)
    np.testing.assert_allclose(m @ ramp, [2.5, 4.5, 6.5, 8.5])


def test_channel_and_batch_mismatch():
    disc = small_disc()
    with pytest.raises(ShapeMismatch):
        disc(Tensor(np.zeros((1, 3, 16, 16))), [(0, 0, 4, 4)])
    with pytest.raises(ShapeMismatch):
        disc(Tensor(np.zeros((2, 9, 16, 16))), [(0, 0, 4, 4)])


def test_distinct_prefixes_and_parameters():
    models = build_models(GeneratorConfig(base_channels=4, num_gc_blocks=1, image_size=16))
    d1 = dict(models.disc_lv1.named_parameters("disc.lv1"))
    d2 = dict(models.disc_lv2.named_parameters("disc.lv2"))
    assert all(k.startswith("disc.lv1.") for k in d1) and all(k.startswith("disc.lv2.") for k in d2)
    assert not {id(p) for p in d1.values()} & {id(p) for p in d2.values()}
    first = "global_net.convs.0.weight"
    assert not np.array_equal(d1[f"disc.lv1.{first}"].data, d2[f"disc.lv2.{first}"].data)


def test_discriminator_gradients():
    disc = small_disc()
    rng = np.random.default_rng(5)
    for net in (disc.global_net, disc.local_net):
        net.attention.gamma.data[:] = 0.5
    band = Parameter(rng.normal(size=(1, 9, 16, 16)))
    r1, r2 = rng.normal(size=(1, 1, 1, 1)), rng.normal(size=(1, 1, 1, 1))

    def fn():
        out = disc(band, [(4, 4, 12, 10)])
        return tsum(out.global_scores * Tensor(r1)) + tsum(out.local_scores * Tensor(r2))

    err = check_gradients(fn, [band] + disc.parameters(), max_entries=6, rng=np.random.default_rng(2))
    assert err < 1e-4
