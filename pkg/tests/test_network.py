import json

import numpy as np
import pytest

from nnreach import (
    ConfigError,
    FeedForwardNetwork,
    Layer,
    forward,
    load_network,
    random_network,
    save_network,
)


def naive_forward(net, x):
    """Independent oracle: plain Python loops over neurons."""
    h = list(map(float, x))
    for layer in net.layers:
        z = []
        for row, bias in zip(layer.W, layer.b):
            acc = 0.0
            for wij, hj in zip(row, h):
                acc += wij * hj
            z.append(acc + bias)
        if layer.act == "relu":
            h = [max(v, 0.0) for v in z]
        elif layer.act == "tanh":
            h = [float(np.tanh(v)) for v in z]
        elif layer.act == "sigmoid":
            h = [1.0 / (1.0 + float(np.exp(-v))) for v in z]
        else:
            h = z
    out = []
    for row, bias in zip(net.out_W, net.out_b):
        acc = 0.0
        for wij, hj in zip(row, h):
            acc += wij * hj
        out.append(acc + bias)
    return np.array(out)


def identity_relu_net():
    return FeedForwardNetwork(
        (Layer(np.array([[1.0]]), np.array([0.0]), "relu"),),
        np.array([[1.0]]),
        np.array([0.0]),
    )


class TestForward:
    def test_relu_kills_negatives(self):
        net = identity_relu_net()
        assert forward(net, np.array([-1.0])) == pytest.approx(0.0)

    def test_positive_passthrough(self):
        net = identity_relu_net()
        assert forward(net, np.array([2.0])) == pytest.approx(2.0)

    def test_matches_naive_oracle(self, rng):
        for act in ("relu", "tanh", "sigmoid", "identity"):
            net = random_network([3, 8, 6, 2], activation=act, rng=rng)
            for _ in range(10):
                x = rng.normal(size=3)
                got = forward(net, x)
                want = naive_forward(net, x)
                assert np.allclose(got, want, atol=1e-12, rtol=0)

    def test_batched_matches_single(self, rng):
        net = random_network([4, 10, 3], rng=rng)
        xs = rng.normal(size=(7, 4))
        batch = forward(net, xs)
        for i in range(7):
            # gemm vs gemv kernels differ in the last ulp
            assert np.allclose(batch[i], forward(net, xs[i]), atol=1e-12, rtol=0)

    def test_piecewise_affine_on_active_region(self, rng):
        # all-positive preactivations: the map is affine there, so the
        # midpoint value is the mean of the endpoint values
        W = np.abs(rng.normal(size=(5, 3)))
        net = FeedForwardNetwork(
            (Layer(W, np.ones(5), "relu"),),
            rng.normal(size=(2, 5)),
            rng.normal(size=2),
        )
        x1 = np.array([0.5, 0.7, 0.2])
        x2 = np.array([0.9, 0.8, 0.6])
        mid = forward(net, 0.5 * (x1 + x2))
        avg = 0.5 * (forward(net, x1) + forward(net, x2))
        assert np.allclose(mid, avg, atol=1e-12)


class TestFileFormat:
    def test_minimal_file(self, tmp_path):
        doc = {
            "layers": [{"W": [[1.0]], "b": [0.0], "act": "relu"}],
            "out": {"W": [[1.0]], "b": [0.0]},
        }
        p = tmp_path / "net.json"
        p.write_text(json.dumps(doc))
        net = load_network(p)
        assert net.input_dim == 1 and net.output_dim == 1 and net.depth == 1

    def test_dimension_mismatch_message(self, tmp_path):
        doc = {
            "layers": [
                {"W": [[1.0, 2.0]], "b": [0.0], "act": "relu"},  # 2 -> 1
                {"W": [[1.0, 1.0, 1.0, 1.0]] * 2, "b": [0.0, 0.0], "act": "relu"},
            ],
            "out": {"W": [[1.0, 1.0]], "b": [0.0]},
        }
        p = tmp_path / "bad.json"
        p.write_text(json.dumps(doc))
        with pytest.raises(ConfigError, match="layer 2 expects 4 inputs, got 1"):
            load_network(p)

    def test_unknown_activation(self, tmp_path):
        doc = {
            "layers": [{"W": [[1.0]], "b": [0.0], "act": "peculiar"}],
            "out": {"W": [[1.0]], "b": [0.0]},
        }
        p = tmp_path / "bad.json"
        p.write_text(json.dumps(doc))
        with pytest.raises(ConfigError, match="activation"):
            load_network(p)

    def test_parse_failure(self, tmp_path):
        p = tmp_path / "broken.json"
        p.write_text("{not json")
        with pytest.raises(ConfigError, match="parse"):
            load_network(p)

    def test_roundtrip_bit_identical(self, rng, tmp_path):
        net = random_network([4, 16, 16, 2], rng=rng)
        p1 = tmp_path / "a.json"
        p2 = tmp_path / "b.json"
        save_network(net, p1)
        reloaded = load_network(p1)
        for layer, back in zip(net.layers, reloaded.layers):
            assert np.array_equal(layer.W, back.W)
            assert np.array_equal(layer.b, back.b)
        assert np.array_equal(net.out_W, reloaded.out_W)
        assert np.array_equal(net.out_b, reloaded.out_b)
        save_network(reloaded, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_vehicle_controller_shape(self):
        from nnreach import data_path

        net = load_network(data_path("vehicle_controller.json"))
        assert net.input_dim == 4
        assert net.output_dim == 2
        assert net.depth == 2
        assert net.hidden_sizes == (100, 100)
        assert all(layer.act == "relu" for layer in net.layers)
