"""Feed-forward controller networks: representation, file I/O, exact evaluation.

A network is a chain of affine layers with slope-restricted diagonal
activations (slope in [0, 1]) and a final affine map with no activation.
Weights live in a single JSON document::

    {"layers": [{"W": [[...]], "b": [...], "act": "relu"}, ...],
     "out":    {"W": [[...]], "b": [...]}}

Matrices are row-major; numbers round-trip exactly through JSON because
serialization uses shortest round-trip decimal formatting.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionMismatch

ACTIVATIONS = ("relu", "sigmoid", "tanh", "identity")


def _sigmoid(z):
    # piecewise form avoids overflow in exp for large |z|
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def apply_activation(name, z):
    z = np.asarray(z, dtype=float)
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "sigmoid":
        return _sigmoid(z)
    if name == "tanh":
        return np.tanh(z)
    if name == "identity":
        return z
    raise ConfigError(f"unknown activation tag {name!r}")


@dataclass(frozen=True)
class Layer:
    W: np.ndarray
    b: np.ndarray
    act: str


@dataclass(frozen=True)
class FeedForwardNetwork:
    """Validated k-layer network plus its final affine map."""

    layers: tuple
    out_W: np.ndarray
    out_b: np.ndarray

    def __post_init__(self):
        prev = None
        for idx, layer in enumerate(self.layers, start=1):
            if layer.act not in ACTIVATIONS:
                raise ConfigError(
                    f"layer {idx} has unknown activation tag {layer.act!r}"
                )
            if layer.W.ndim != 2 or layer.b.ndim != 1:
                raise ConfigError(f"layer {idx} has malformed W or b")
            if layer.W.shape[0] != layer.b.shape[0]:
                raise ConfigError(
                    f"layer {idx}: W has {layer.W.shape[0]} rows "
                    f"but b has {layer.b.shape[0]} entries"
                )
            if prev is not None and layer.W.shape[1] != prev:
                raise ConfigError(
                    f"layer {idx} expects {layer.W.shape[1]} inputs, got {prev}"
                )
            prev = layer.W.shape[0]
        if self.out_W.ndim != 2 or self.out_b.ndim != 1:
            raise ConfigError("output map has malformed W or b")
        if prev is not None and self.out_W.shape[1] != prev:
            raise ConfigError(
                f"output map expects {self.out_W.shape[1]} inputs, got {prev}"
            )
        if self.out_W.shape[0] != self.out_b.shape[0]:
            raise ConfigError("output map: W rows and b length differ")

    @property
    def input_dim(self):
        return self.layers[0].W.shape[1] if self.layers else self.out_W.shape[1]

    @property
    def output_dim(self):
        return self.out_W.shape[0]

    @property
    def depth(self):
        """Number of activation layers."""
        return len(self.layers)

    @property
    def hidden_sizes(self):
        return tuple(layer.W.shape[0] for layer in self.layers)

    def affine(self, j):
        """Affine map number j: hidden layers are 0..depth-1, output map is depth."""
        if j < len(self.layers):
            return self.layers[j].W, self.layers[j].b
        if j == len(self.layers):
            return self.out_W, self.out_b
        raise IndexError(f"affine index {j} out of range")


def forward(net: FeedForwardNetwork, x):
    """Exact network evaluation; x may be a vector or a batch (..., input_dim)."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != net.input_dim:
        raise DimensionMismatch(
            f"network expects input dimension {net.input_dim}, got {x.shape[-1]}"
        )
    h = x
    for layer in net.layers:
        h = apply_activation(layer.act, h @ layer.W.T + layer.b)
    return h @ net.out_W.T + net.out_b


def _matrix(obj, what):
    try:
        m = np.asarray(obj, dtype=float)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{what}: not a numeric matrix") from e
    if m.ndim != 2:
        raise ConfigError(f"{what}: expected a 2-d matrix, got shape {m.shape}")
    return m


def from_dict(doc) -> FeedForwardNetwork:
    """Build and validate a network from the JSON document structure."""
    if not isinstance(doc, dict) or "out" not in doc:
        raise ConfigError("weight document must be an object with an 'out' entry")
    layers = []
    for idx, entry in enumerate(doc.get("layers", []), start=1):
        try:
            W = _matrix(entry["W"], f"layer {idx} W")
            b = np.asarray(entry["b"], dtype=float)
            act = entry["act"]
        except KeyError as e:
            raise ConfigError(f"layer {idx} is missing field {e}") from e
        layers.append(Layer(W, np.atleast_1d(b), act))
    out = doc["out"]
    try:
        W = _matrix(out["W"], "output W")
        b = np.atleast_1d(np.asarray(out["b"], dtype=float))
    except KeyError as e:
        raise ConfigError(f"output map is missing field {e}") from e
    return FeedForwardNetwork(tuple(layers), W, b)


def to_dict(net: FeedForwardNetwork) -> dict:
    return {
        "layers": [
            {"W": layer.W.tolist(), "b": layer.b.tolist(), "act": layer.act}
            for layer in net.layers
        ],
        "out": {"W": net.out_W.tolist(), "b": net.out_b.tolist()},
    }


def load_network(path) -> FeedForwardNetwork:
    """Load and validate a network from a JSON weight file."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as e:
        raise ConfigError(f"cannot parse weight file {path}: {e}") from e
    return from_dict(doc)


def save_network(net: FeedForwardNetwork, path):
    with open(path, "w") as fh:
        json.dump(to_dict(net), fh)
        fh.write("\n")


def random_network(sizes, activation="relu", rng=None, scale=1.0):
    """Random network with layer widths ``sizes`` (input, hidden..., output).

    Weights are Gaussian with the usual 1/sqrt(fan_in) normalization times
    ``scale``. Used by tests and demos; not a substitute for a trained
    controller.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    sizes = list(sizes)
    if len(sizes) < 2:
        raise ValueError("need at least input and output sizes")
    layers = []
    for fan_in, fan_out in zip(sizes[:-2], sizes[1:-1]):
        W = rng.normal(0.0, scale / np.sqrt(fan_in), size=(fan_out, fan_in))
        b = rng.normal(0.0, 0.1 * scale, size=fan_out)
        layers.append(Layer(W, b, activation))
    W = rng.normal(0.0, scale / np.sqrt(sizes[-2]), size=(sizes[-1], sizes[-2]))
    b = rng.normal(0.0, 0.1 * scale, size=sizes[-1])
    return FeedForwardNetwork(tuple(layers), W, b)
