"""HyperNEAT substrates painted by a CPPN.

The CPPN is queried with neuron coordinates: (x_dst, y_dst, x_src, y_src) for
a connection weight and (x, y, 0, 0) for a bias. Weight outputs with magnitude
below the threshold produce no connection; the rest are mapped affinely onto
[-3, 3].
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .genome import CppnNetwork

WEIGHT_THRESHOLD = 0.2
WEIGHT_RANGE = 3.0
TWO_PI = 2.0 * math.pi


def _spread(n):
    if n == 1:
        return [0.0]
    return [-1.0 + 2.0 * i / (n - 1) for i in range(n)]


@dataclass(frozen=True)
class SubstrateLayout:
    """Neuron coordinates per layer: inputs first, output layer last."""

    layers: tuple

    def __post_init__(self):
        if len(self.layers) < 2:
            raise ConfigurationError("a substrate needs an input and an output layer")
        seen = set()
        for layer in self.layers:
            if not layer:
                raise ConfigurationError("empty substrate layer")
            for x, y in layer:
                if not (-1.0 <= x <= 1.0 and -1.0 <= y <= 1.0):
                    raise ConfigurationError(f"neuron ({x}, {y}) outside [-1, 1]^2")
                if (x, y) in seen:
                    raise ConfigurationError(f"duplicate neuron coordinate ({x}, {y})")
                seen.add((x, y))

    @classmethod
    def layered(cls, n_inputs=4, hidden=(7, 6), n_outputs=1):
        """Evenly spaced layers on y in [-1, 1], neurons evenly spaced on x."""
        sizes = [n_inputs, *hidden, n_outputs]
        ys = _spread(len(sizes))
        layers = tuple(tuple((x, ys[k]) for x in _spread(n)) for k, n in enumerate(sizes))
        return cls(layers)

    @property
    def sizes(self):
        return [len(layer) for layer in self.layers]

    @property
    def n_hidden(self):
        return sum(self.sizes[1:-1])

    @property
    def n_inputs(self):
        return self.sizes[0]

    @property
    def coords(self):
        return [c for layer in self.layers for c in layer]

    def offsets(self):
        out, pos = [], 0
        for n in self.sizes:
            out.append(pos)
            pos += n
        return out

    def max_connections(self):
        s = self.sizes
        return sum(a * b for a, b in zip(s[:-1], s[1:]))


DEFAULT_LAYOUT = SubstrateLayout.layered()


def normalize_weight(raw, threshold=WEIGHT_THRESHOLD):
    """Map a raw CPPN output to a weight in [-3, 3], or None below threshold."""
    r = _sanitize(raw)
    if abs(r) < threshold:
        return None
    return math.copysign((abs(r) - threshold) / (1.0 - threshold) * WEIGHT_RANGE, r) if r != 0 else 0.0


def normalize_bias(raw, threshold=WEIGHT_THRESHOLD):
    """Same affine map as weights, with a dead zone instead of removal."""
    r = _sanitize(raw)
    mag = max(abs(r) - threshold, 0.0) / (1.0 - threshold) * WEIGHT_RANGE
    return math.copysign(mag, r) if mag > 0.0 else 0.0


def _sanitize(raw):
    r = float(raw)
    if math.isnan(r):
        return 0.0
    return min(max(r, -1.0), 1.0)


def _net(cppn):
    return cppn if isinstance(cppn, CppnNetwork) else CppnNetwork(cppn)


def _bias_output(net):
    return 1 if len(net.output_ids) > 1 else 0


def query_weight_2d(cppn, src, dst, threshold=WEIGHT_THRESHOLD):
    net = _net(cppn)
    raw = net.activate([dst[0], dst[1], src[0], src[1]])[0]
    return normalize_weight(raw, threshold)


def query_bias_2d(cppn, node, threshold=WEIGHT_THRESHOLD):
    net = _net(cppn)
    raw = net.activate([node[0], node[1], 0.0, 0.0])[_bias_output(net)]
    return normalize_bias(raw, threshold)


def query_weight_3d(cppn, src, dst, threshold=WEIGHT_THRESHOLD):
    net = _net(cppn)
    raw = net.activate([dst[0], dst[1], dst[2], src[0], src[1], src[2]])[0]
    return normalize_weight(raw, threshold)


def query_bias_3d(cppn, node, threshold=WEIGHT_THRESHOLD):
    net = _net(cppn)
    raw = net.activate([node[0], node[1], node[2], 0.0, 0.0, 0.0])[_bias_output(net)]
    return normalize_bias(raw, threshold)


@dataclass
class SubstrateNet:
    layout: SubstrateLayout
    weights: dict = field(default_factory=dict)  # (src index, dst index) -> weight
    biases: dict = field(default_factory=dict)  # node index -> bias
    raw: dict = field(default_factory=dict, repr=False)  # (src, dst) -> raw CPPN output

    def __post_init__(self):
        self._matrices = None

    @property
    def n_connections(self):
        return len(self.weights)

    def complexity(self):
        return self.n_connections, self.layout.n_hidden

    def matrices(self):
        """Dense (W, b) per adjacent layer pair, absent connections as 0."""
        if self._matrices is None:
            offs = self.layout.offsets()
            sizes = self.layout.sizes
            mats = []
            for k in range(len(sizes) - 1):
                W = np.zeros((sizes[k + 1], sizes[k]))
                b = np.zeros(sizes[k + 1])
                for j in range(sizes[k + 1]):
                    dst = offs[k + 1] + j
                    b[j] = self.biases.get(dst, 0.0)
                    for i in range(sizes[k]):
                        w = self.weights.get((offs[k] + i, dst))
                        if w is not None:
                            W[j, i] = w
                mats.append((W, b))
            self._matrices = mats
        return self._matrices

    def to_dict(self):
        return {
            "layout": [[list(c) for c in layer] for layer in self.layout.layers],
            "connections": [{"src": s, "dst": d, "w": w} for (s, d), w in sorted(self.weights.items())],
            "biases": [{"node": n, "b": b} for n, b in sorted(self.biases.items())],
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, data):
        layout = SubstrateLayout(tuple(tuple(tuple(c) for c in layer) for layer in data["layout"]))
        weights = {(int(c["src"]), int(c["dst"])): float(c["w"]) for c in data["connections"]}
        biases = {int(b["node"]): float(b["b"]) for b in data["biases"]}
        return cls(layout, weights, biases)


def build_substrate(cppn, layout=DEFAULT_LAYOUT, threshold=WEIGHT_THRESHOLD):
    """Query every adjacent-layer pair and every non-input bias once.

    Iteration is layer-major, then destination, then source index.
    """
    net = _net(cppn)
    coords = layout.coords
    offs = layout.offsets()
    sizes = layout.sizes
    pairs, rows = [], []
    for k in range(len(sizes) - 1):
        for j in range(sizes[k + 1]):
            dst = offs[k + 1] + j
            for i in range(sizes[k]):
                src = offs[k] + i
                pairs.append((src, dst))
                (xs, ys), (xd, yd) = coords[src], coords[dst]
                rows.append((xd, yd, xs, ys))
    bias_nodes = list(range(offs[1], len(coords)))
    bias_rows = [(coords[n][0], coords[n][1], 0.0, 0.0) for n in bias_nodes]
    out_w = net.activate(np.array(rows, dtype=float))[:, 0]
    out_b = net.activate(np.array(bias_rows, dtype=float))[:, _bias_output(net)]
    weights, raws = {}, {}
    for (src, dst), raw in zip(pairs, out_w):
        w = normalize_weight(raw, threshold)
        if w is not None:
            weights[(src, dst)] = w
            raws[(src, dst)] = float(raw)
    biases = {n: normalize_bias(raw, threshold) for n, raw in zip(bias_nodes, out_b)}
    return SubstrateNet(layout, weights, biases, raws)


def substrate_forward(net, inputs):
    """Phase offset(s) for neuron inputs of shape (4,) or (n, 4).

    Hidden neurons use ReLU; the output is linear, then clamped to [-2pi, 2pi].
    """
    x = np.asarray(inputs, dtype=float)
    single = x.ndim == 1
    h = x[None, :] if single else x
    mats = net.matrices()
    for k, (W, b) in enumerate(mats):
        h = h @ W.T + b
        if k < len(mats) - 1:
            h = np.maximum(h, 0.0)
    out = np.clip(np.nan_to_num(h[:, 0], nan=0.0, posinf=TWO_PI, neginf=-TWO_PI), -TWO_PI, TWO_PI)
    return float(out[0]) if single else out


def hyperneat_complexity(genome, layout=DEFAULT_LAYOUT):
    """(substrate connections, hidden neurons) for a HyperNEAT CPPN genome."""
    return build_substrate(genome, layout).complexity()


__all__ = [
    "DEFAULT_LAYOUT",
    "SubstrateLayout",
    "SubstrateNet",
    "build_substrate",
    "hyperneat_complexity",
    "normalize_bias",
    "normalize_weight",
    "query_bias_2d",
    "query_bias_3d",
    "query_weight_2d",
    "query_weight_3d",
    "substrate_forward",
]
