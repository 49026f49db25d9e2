import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wavefill.errors import ShapeMismatch
from wavefill.fran import FRAN, FRANResBlk, aggregate_high, attention_hidden, attention_scores, fran_forward, pool_factor
from wavefill.nn import functional as F
from wavefill.nn.gradcheck import check_gradients
from wavefill.nn.module import Conv2d, Parameter
from wavefill.nn.tensor import Tensor, tsum


def identity_proj(channels):
    conv = Conv2d(np.random.default_rng(0), channels, channels, kernel=1, bias=False, dtype=np.float64)
    conv.weight.data = np.eye(channels).reshape(channels, channels, 1, 1)
    return conv


def probe(out, seed=5):
    return tsum(out * Tensor(np.random.default_rng(seed).normal(size=out.shape)))


def test_hidden_and_pool_rules():
    assert attention_hidden(32) == 4
    assert attention_hidden(8) == 2
    assert pool_factor(16, 16) == 1 and pool_factor(32, 32) == 1
    assert pool_factor(64, 64) == 2 and pool_factor(128, 128) == 4


def test_constant_low_gives_uniform_scores():
    fran = FRAN(np.random.default_rng(1), 8, 9, dtype=np.float64)
    x = Tensor(np.broadcast_to(np.random.default_rng(2).normal(size=(1, 8, 1, 1)), (1, 8, 4, 4)).copy())
    scores = attention_scores(x, fran.key, fran.query).data
    np.testing.assert_allclose(scores, 1 / 16, atol=1e-15)


def test_two_position_hand_evaluation():
    # f, g identity: s_ij = x_i . x_j, W = row softmax
    x = np.array([[1.0, 2.0], [0.5, -1.0]])  # channels x positions
    scores = attention_scores(Tensor(x.reshape(1, 2, 1, 2)), identity_proj(2), identity_proj(2)).data[0]
    s = np.array([[1 + 0.25, 2 - 0.5], [2 - 0.5, 4 + 1]])
    expected = np.exp(s) / np.exp(s).sum(axis=1, keepdims=True)
    np.testing.assert_allclose(scores, expected, atol=1e-14)


def test_identity_attention_recovers_values():
    rng = np.random.default_rng(3)
    x_high = Tensor(rng.normal(size=(2, 5, 3, 3)))
    value = Conv2d(rng, 5, 4, kernel=1, bias=False, dtype=np.float64)
    agg = aggregate_high(Tensor(np.broadcast_to(np.eye(9), (2, 9, 9)).copy()), x_high, value).data
    assert np.max(np.abs(agg - value(x_high).data)) < 1e-6


def test_uniform_attention_gives_mean():
    rng = np.random.default_rng(4)
    x_high = Tensor(rng.normal(size=(1, 3, 2, 4)))
    value = Conv2d(rng, 3, 2, kernel=1, bias=False, dtype=np.float64)
    agg = aggregate_high(Tensor(np.full((1, 8, 8), 1 / 8)), x_high, value).data
    expected = value(x_high).data.mean(axis=(2, 3), keepdims=True)
    np.testing.assert_allclose(agg, np.broadcast_to(expected, agg.shape), atol=1e-14)


def test_aggregation_matches_double_loop():
    rng = np.random.default_rng(5)
    x_low, x_high = rng.normal(size=(1, 4, 2, 2)), rng.normal(size=(1, 6, 2, 2))
    fran = FRAN(rng, 4, 6, dtype=np.float64)
    w = attention_scores(Tensor(x_low), fran.key, fran.query).data[0]
    agg = aggregate_high(Tensor(w[None]), Tensor(x_high), fran.value).data[0].reshape(-1, 4)
    v = fran.value(Tensor(x_high)).data[0].reshape(-1, 4)
    q = fran.query(Tensor(x_low)).data[0].reshape(-1, 4)
    k = fran.key(Tensor(x_low)).data[0].reshape(-1, 4)
    brute = np.zeros_like(agg)
    for i in range(4):
        logits = np.array([sum(q[c, i] * k[c, j] for c in range(q.shape[0])) for j in range(4)])
        weights = np.exp(logits) / np.exp(logits).sum()
        for j in range(4):
            brute[:, i] += weights[j] * v[:, j]
    np.testing.assert_allclose(agg, brute, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**20), side=st.sampled_from([2, 4, 8, 64]), scale=st.floats(0.01, 30))
def test_softmax_slices_sum_to_one(seed, side, scale):
    rng = np.random.default_rng(seed)
    fran = FRAN(rng, 16, 9, dtype=np.float64)
    x = Tensor(rng.normal(size=(1, 16, side, side)) * scale)
    x = F.max_pool2d(x, pool_factor(side, side)) if side > 32 else x
    scores = attention_scores(x, fran.key, fran.query).data
    assert np.max(np.abs(scores.sum(axis=-1) - 1)) < 1e-6


def test_zero_gamma_beta_gives_zero():
    rng = np.random.default_rng(6)
    fran = FRAN(rng, 8, 9, dtype=np.float64)
    for conv in (fran.gamma, fran.beta):
        conv.weight.data[:] = 0
        conv.bias.data[:] = 0
    out = fran_forward(Tensor(rng.normal(size=(1, 8, 4, 4))), Tensor(rng.normal(size=(1, 9, 4, 4))), fran)
    assert np.all(out.data == 0)


def test_unit_gamma_zero_beta_is_pure_normalization():
    rng = np.random.default_rng(7)
    fran = FRAN(rng, 8, 9, dtype=np.float64)
    fran.gamma.weight.data[:] = 0
    fran.beta.weight.data[:] = 0
    fran.beta.bias.data[:] = 0
    x_low = Tensor(rng.normal(3.0, 2.0, size=(2, 8, 6, 6)))
    out = fran(x_low, Tensor(rng.normal(size=(2, 9, 6, 6)))).data
    assert np.max(np.abs(out.mean(axis=1))) < 1e-6
    np.testing.assert_allclose(out, F.pono(x_low)[0].data, atol=1e-12)


def test_zero_high_input_is_finite():
    rng = np.random.default_rng(8)
    fran = FRAN(rng, 8, 9, dtype=np.float64)
    x_low = Tensor(rng.normal(size=(1, 8, 8, 8)))
    x_high = Tensor(np.zeros((1, 9, 8, 8)))
    w = attention_scores(x_low, fran.key, fran.query)
    assert np.all(aggregate_high(w, x_high, fran.value).data == 0)
    gamma, beta = fran.modulation(x_low, x_high)
    out = fran(x_low, x_high)
    assert np.all(np.isfinite(out.data)) and np.all(np.isfinite(gamma.data))


def test_aggregation_is_permutation_equivariant():
    rng = np.random.default_rng(9)
    fran = FRAN(rng, 8, 6, dtype=np.float64)
    x_low, x_high = rng.normal(size=(1, 8, 3, 4)), rng.normal(size=(1, 6, 3, 4))
    perm = rng.permutation(12)

    def permute(a):
        return a.reshape(1, a.shape[1], 12)[..., perm].reshape(a.shape)

    def agg(lo, hi):
        return aggregate_high(attention_scores(Tensor(lo), fran.key, fran.query), Tensor(hi), fran.value).data

    np.testing.assert_allclose(agg(permute(x_low), permute(x_high)), permute(agg(x_low, x_high)), atol=1e-12)


def test_pooled_attention_path():
    rng = np.random.default_rng(10)
    fran = FRAN(rng, 4, 3, dtype=np.float64)
    out = fran(Tensor(rng.normal(size=(1, 4, 64, 64))), Tensor(rng.normal(size=(1, 3, 64, 64))))
    assert out.shape == (1, 4, 64, 64) and np.all(np.isfinite(out.data))


def test_misaligned_inputs():
    fran = FRAN(np.random.default_rng(0), 4, 3)
    with pytest.raises(ShapeMismatch):
        fran(Tensor(np.zeros((1, 4, 8, 8), np.float32)), Tensor(np.zeros((1, 3, 4, 4), np.float32)))
    with pytest.raises(ShapeMismatch):
        aggregate_high(Tensor(np.zeros((1, 4, 4))), Tensor(np.zeros((1, 3, 3, 3))), fran.value)


def test_fran_gradients_8x8():
    rng = np.random.default_rng(11)
    fran = FRAN(rng, 8, 9, dtype=np.float64)
    x_low = Parameter(rng.normal(size=(1, 8, 8, 8)))
    x_high = Parameter(rng.normal(size=(1, 9, 8, 8)))
    tensors = [x_low, x_high] + fran.parameters()
    err = check_gradients(lambda: probe(fran(x_low, x_high)), tensors, max_entries=12, rng=np.random.default_rng(0))
    assert err < 1e-4


def test_resblk_shapes_skip_and_gradients():
    rng = np.random.default_rng(12)
    blk = FRANResBlk(rng, 16, 24, 9, dtype=np.float64)
    x_low = Parameter(rng.normal(size=(1, 16, 8, 8)))
    x_high = Parameter(rng.normal(size=(1, 9, 8, 8)))
    assert blk(x_low, x_high).shape == (1, 24, 8, 8)
    same = FRANResBlk(rng, 16, 16, 9, dtype=np.float64)
    assert same(x_low, x_high).shape == x_low.shape
    same.conv2.weight.data[:] = 0
    same.conv2.bias.data[:] = 0
    np.testing.assert_array_equal(same(x_low, x_high).data, x_low.data)
    err = check_gradients(lambda: probe(blk(x_low, x_high)), [x_low, x_high] + blk.parameters(),
                          max_entries=8, rng=np.random.default_rng(1))
    assert err < 1e-4
