"""Multilayer perceptrons and a max-pooled point encoder."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DomainError, ShapeError
from . import ops

ACTIVATIONS = {"tanh": ops.tanh, "relu": ops.relu}


@dataclass
class Mlp:
    """Affine layers with a hidden activation and an optional output one.

    ``weights[i]`` has shape ``(widths[i], widths[i+1])`` so inputs are row
    vectors.  Entries may be :class:`~nffsim.nn.tape.Var` after :meth:`bind`.
    """

    widths: tuple
    weights: list
    biases: list
    activation: str = "tanh"
    out_activation: str | None = None

    def __post_init__(self):
        self.widths = tuple(int(w) for w in self.widths)
        if len(self.widths) < 2:
            raise ShapeError(f"an Mlp needs at least two widths, got {self.widths}")
        if self.activation not in ACTIVATIONS:
            raise ShapeError(f"unknown activation {self.activation!r}")
        if len(self.weights) != len(self.widths) - 1 or len(self.biases) != len(self.weights):
            raise ShapeError("one weight matrix and bias per layer expected")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if tuple(w.shape) != (self.widths[i], self.widths[i + 1]) or tuple(b.shape) != (self.widths[i + 1],):
                raise ShapeError(f"layer {i}: parameter shapes do not match widths {self.widths}")

    @classmethod
    def create(cls, widths, rng=None, activation="tanh", out_activation=None, last_scale=1.0, init="normal"):
        """Random init (std 1/sqrt(fan_in), last layer scaled) or ``init="zeros"``."""
        rng = np.random.default_rng(0) if rng is None else rng
        weights, biases = [], []
        for i, (a, b) in enumerate(zip(widths[:-1], widths[1:])):
            if init == "zeros":
                w = np.zeros((a, b))
            else:
                w = rng.normal(0.0, 1.0 / np.sqrt(a), size=(a, b))
                if i == len(widths) - 2:
                    w *= last_scale
            weights.append(w)
            biases.append(np.zeros(b))
        return cls(tuple(widths), weights, biases, activation, out_activation)

    @property
    def n_in(self):
        return self.widths[0]

    @property
    def n_out(self):
        return self.widths[-1]

    def parameters(self, prefix=""):
        tree = {}
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            tree[f"{prefix}W{i}"] = w
            tree[f"{prefix}b{i}"] = b
        return tree

    def bind(self, tree, prefix=""):
        """Copy of this net whose parameters are taken from ``tree``."""
        n = len(self.weights)
        return Mlp(self.widths, [tree[f"{prefix}W{i}"] for i in range(n)],
                   [tree[f"{prefix}b{i}"] for i in range(n)], self.activation, self.out_activation)


def mlp_forward(net: Mlp, x):
    """Apply ``net`` to the last axis of ``x``; leading axes are batch axes."""
    shape = ops.value(x).shape
    if not shape or shape[-1] != net.n_in:
        raise ShapeError(f"mlp input has trailing size {shape[-1] if shape else None}, expected {net.n_in}")
    lead = shape[:-1]
    h = ops.reshape(x, (-1, net.n_in))
    act = ACTIVATIONS[net.activation]
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        h = ops.add(ops.matmul(h, w), b)
        if i < last:
            h = act(h)
        elif net.out_activation is not None:
            h = ACTIVATIONS[net.out_activation](h)
    return ops.reshape(h, lead + (net.n_out,))


@dataclass
class PointEncoder:
    """Shared per-point MLP, max-pool over points, then a head MLP."""

    point_mlp: Mlp
    head: Mlp
    length_scale: float = field(default=1.0)

    @classmethod
    def create(cls, d_out=200, rng=None, widths=(3, 64, 128), init="normal"):
        rng = np.random.default_rng(0) if rng is None else rng
        point = Mlp.create(widths, rng, out_activation="tanh", init=init)
        head = Mlp.create((widths[-1], d_out), rng, init=init)
        return cls(point, head)

    @property
    def d_out(self):
        return self.head.n_out

    def parameters(self, prefix=""):
        return {**self.point_mlp.parameters(prefix + "point."), **self.head.parameters(prefix + "head.")}

    def bind(self, tree, prefix=""):
        return PointEncoder(self.point_mlp.bind(tree, prefix + "point."), self.head.bind(tree, prefix + "head."),
                            self.length_scale)


def point_features(enc: PointEncoder, points):
    return mlp_forward(enc.point_mlp, points)


def point_encode(enc: PointEncoder, points):
    """Permutation-invariant feature of a cloud ``(..., M, 3)``."""
    shape = ops.value(points).shape
    if len(shape) < 2 or shape[-2] == 0:
        raise DomainError("cannot encode an empty point cloud")
    pooled = ops.max(point_features(enc, points), axis=-2)
    return mlp_forward(enc.head, pooled)
