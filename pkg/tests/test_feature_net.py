import numpy as np
import pytest

from frdo.feature_net import (ConvLayer, FeatureMap, MaxPool2, Network, ReLU, WeightsError,
                              conv2d, extract_features, identity_network, load_weights, maxpool2,
                              relu, save_weights, seeded_test_network)
from frdo.frame_io import Block


def naive_conv(x, kernel, bias):
    c, h, w = x.shape
    out = np.zeros((kernel.shape[0], h, w))
    for o in range(kernel.shape[0]):
        for yy in range(h):
            for xx in range(w):
                acc = float(bias[o])
                for i in range(c):
                    for ky in range(3):
                        for kx in range(3):
                            sy, sx = yy + ky - 1, xx + kx - 1
                            if 0 <= sy < h and 0 <= sx < w:
                                acc += kernel[o, i, ky, kx] * x[i, sy, sx]
                out[o, yy, xx] = acc
    return out


def test_conv_matches_naive(rng):
    x = rng.normal(size=(2, 8, 8))
    k = rng.normal(size=(3, 2, 3, 3))
    b = rng.normal(size=3)
    got = conv2d(FeatureMap(x), ConvLayer(k, b)).values
    ref = naive_conv(x, k, b)
    assert np.abs(got - ref).max() <= 1e-6 * np.abs(ref).max()


def test_conv_examples():
    ident = np.zeros((1, 1, 3, 3))
    ident[0, 0, 1, 1] = 1
    x = np.arange(20.0).reshape(1, 4, 5)
    assert np.array_equal(conv2d(FeatureMap(x), ConvLayer(ident, np.zeros(1))).values, x)
    const = conv2d(FeatureMap(x), ConvLayer(np.zeros((1, 1, 3, 3)), np.array([2.5]))).values
    assert (const == 2.5).all()
    ones = conv2d(FeatureMap(np.ones((1, 3, 3))), ConvLayer(np.ones((1, 1, 3, 3)), np.zeros(1)))
    assert ones.values[0].tolist() == [[4, 6, 4], [6, 9, 6], [4, 6, 4]]
    with pytest.raises(ValueError, match="channel"):
        conv2d(FeatureMap(np.ones((2, 3, 3))), ConvLayer(np.ones((1, 1, 3, 3)), np.zeros(1)))


def test_relu_and_pool():
    assert relu(FeatureMap(np.array([[[-1.5, 0.0, 2.0]]]))).values.ravel().tolist() == [0, 0, 2]
    assert maxpool2(FeatureMap(np.array([[[1.0, 2], [3, 4]]]))).values.tolist() == [[[4.0]]]
    assert maxpool2(FeatureMap(np.zeros((1, 5, 5)))).shape == (1, 2, 2)
    c = maxpool2(FeatureMap(np.full((2, 6, 4), 7.0))).values
    assert c.shape == (2, 3, 2) and (c == 7).all()


def test_default_shapes():
    net = seeded_test_network(0)
    assert net.output_channels == 64
    assert extract_features(np.zeros((16, 16), np.uint8), net).shape == (64, 8, 8)
    assert extract_features(np.zeros((4, 4), np.uint8), net).shape == (64, 4, 4)


def test_shape_law(small_net):
    for h in range(4, 129, 7):
        for w in range(4, 129, 11):
            fm = extract_features(np.zeros((h, w), np.uint8), small_net)
            assert fm.shape == (8, max(h, 8) // 2, max(w, 8) // 2)


def test_relu_output_nonnegative(rng, small_net):
    fm = extract_features(rng.integers(0, 256, (12, 20)).astype(np.uint8), small_net)
    assert fm.values.min() >= 0


def test_zero_block_zero_bias():
    net = seeded_test_network(3, width=4)
    zb = Network(tuple(ConvLayer(l.kernel, np.zeros_like(l.bias)) if isinstance(l, ConvLayer)
                       else l for l in net.layers), 1)
    assert not extract_features(np.zeros((8, 8), np.uint8), zb).values.any()


def test_identity_network_is_pixels():
    blk = Block.from_array(np.arange(64, dtype=np.uint8).reshape(8, 8))
    fm = extract_features(blk, identity_network())
    assert np.allclose(fm.values[0], blk.samples / 255.0, rtol=0, atol=1e-15)


def test_seeded_determinism():
    a, b, c = seeded_test_network(5), seeded_test_network(5), seeded_test_network(6)
    assert all(np.array_equal(x.kernel, y.kernel) for x, y in zip(a.layers[0:3:2], b.layers[0:3:2]))
    assert not np.array_equal(a.layers[0].kernel, c.layers[0].kernel)
    assert a.input_channels == 1


def test_extract_deterministic(rng, small_net):
    x = rng.integers(0, 256, (16, 16)).astype(np.uint8)
    assert np.array_equal(extract_features(x, small_net).values,
                          extract_features(x.copy(), small_net).values)


def test_three_channel_replication(rng):
    net3 = seeded_test_network(2, in_channels=3, width=4)
    k = net3.layers[0].kernel.sum(axis=1, keepdims=True)
    net1 = Network((ConvLayer(k, net3.layers[0].bias),) + net3.layers[1:], 1)
    x = rng.integers(0, 256, (8, 8)).astype(np.uint8)
    assert np.allclose(extract_features(x, net3).values, extract_features(x, net1).values,
                       atol=1e-5)


def test_scaled_network(rng, small_net):
    x = rng.integers(0, 256, (8, 8)).astype(np.uint8)
    a = extract_features(x, small_net).values
    b = extract_features(x, small_net.scaled(8.0)).values
    assert np.allclose(b, 8 * a, rtol=1e-6)


def test_network_validation():
    with pytest.raises(ValueError):
        Network((ConvLayer(np.zeros((2, 1, 3, 3)), np.zeros(2)),
                 ConvLayer(np.zeros((2, 3, 3, 3)), np.zeros(2))), 1)
    with pytest.raises(ValueError):
        ConvLayer(np.zeros((2, 1, 5, 5)), np.zeros(2))


# -- weight files ------------------------------------------------------------------

def test_weights_roundtrip(tmp_path):
    net = seeded_test_network(9, in_channels=3, width=64)
    save_weights(net, tmp_path / "vgg.txt")
    loaded = load_weights(tmp_path / "vgg.txt")
    assert len(loaded.layers) == 5 and loaded.input_channels == 3
    for a, b in zip(net.layers, loaded.layers):
        if isinstance(a, ConvLayer):
            assert np.array_equal(a.kernel, b.kernel) and np.array_equal(a.bias, b.bias)
        else:
            assert type(a) is type(b)


def _manifest(tmp_path, floats, body="conv 1 2\nrelu\nmaxpool2\n"):
    np.asarray(floats, "<f4").tofile(tmp_path / "w.bin")
    (tmp_path / "m.txt").write_text("blob w.bin\n" + body)
    return tmp_path / "m.txt"


def test_weights_errors(tmp_path):
    with pytest.raises(WeightsError, match="shape mismatch"):
        load_weights(_manifest(tmp_path, np.zeros(10)))
    bad = np.zeros(20)
    bad[3] = np.nan
    with pytest.raises(WeightsError, match="non-finite"):
        load_weights(_manifest(tmp_path, bad))
    (tmp_path / "n.txt").write_text("blob nothere.bin\nconv 1 1\n")
    with pytest.raises(WeightsError, match="missing blob"):
        load_weights(tmp_path / "n.txt")
    with pytest.raises(WeightsError, match="cannot parse"):
        load_weights(_manifest(tmp_path, np.zeros(20), "conv 1\n"))
    assert len(load_weights(_manifest(tmp_path, np.zeros(20))).layers) == 3
